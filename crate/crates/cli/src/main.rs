fn main() {
    std::process::exit(sedsim_cli::main_with_args(std::env::args_os()));
}
