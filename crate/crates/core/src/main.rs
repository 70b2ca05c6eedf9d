fn main() {
    std::process::exit(vortexprop::runner::cli_main(std::env::args_os()));
}
