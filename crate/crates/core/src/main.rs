fn main() {
    std::process::exit(svc_fmd::cli::main_with_args(std::env::args_os()));
}
