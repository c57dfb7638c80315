fn main() {
    std::process::exit(torus_geo::cli::main_with_args(std::env::args_os()));
}
