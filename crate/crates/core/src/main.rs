fn main() {
    std::process::exit(orbitorsion::cli::main_with_args(std::env::args_os()));
}
