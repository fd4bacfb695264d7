fn main() {
    std::process::exit(twomode_cli::main_with_args(std::env::args_os()));
}
