fn main() {
    let code = circle_rds::cli::main_with_args(std::env::args_os());
    std::process::exit(code);
}
