fn main() {
    std::process::exit(hemipwi_cli::main_with_args(std::env::args_os()));
}
