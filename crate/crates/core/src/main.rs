fn main() {
    std::process::exit(debris_edge::cli::dispatch(std::env::args_os()));
}
