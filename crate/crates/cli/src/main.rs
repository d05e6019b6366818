fn main() {
    std::process::exit(induct_cli::dispatch(std::env::args_os()));
}
