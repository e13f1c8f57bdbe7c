fn main() {
    std::process::exit(hermite_wave::cli::main_with(std::env::args_os()));
}
