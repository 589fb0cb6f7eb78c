fn main() {
    std::process::exit(fplab_cli::main_with_args(std::env::args_os()));
}
