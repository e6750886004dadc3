fn main() {
    std::process::exit(sepdecomp::cli::main_with(std::env::args_os()));
}
