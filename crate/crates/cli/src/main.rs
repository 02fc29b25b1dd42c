fn main() {
    std::process::exit(rsosim_cli::main_with(std::env::args_os()));
}
