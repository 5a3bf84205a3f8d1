fn main() {
    std::process::exit(llg_cli::execute(std::env::args_os()));
}
