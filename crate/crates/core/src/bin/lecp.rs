fn main() {
    std::process::exit(plastic_ellipsoid::cli::run(std::env::args_os()));
}
