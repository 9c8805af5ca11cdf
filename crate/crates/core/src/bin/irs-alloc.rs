fn main() {
    std::process::exit(irs_alloc::cli::main_with_args(std::env::args_os()));
}
