fn main() {
    std::process::exit(commuteflow_cli::main_with_args(std::env::args_os()));
}
