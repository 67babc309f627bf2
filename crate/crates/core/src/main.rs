fn main() {
    std::process::exit(alphapatch::cli::main_from_args(std::env::args_os()));
}
