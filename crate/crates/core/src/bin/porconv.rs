fn main() {
    std::process::exit(porous_convection::cli::run(std::env::args_os()));
}
