fn main() {
    std::process::exit(arcforge::cli::dispatch(std::env::args()));
}
