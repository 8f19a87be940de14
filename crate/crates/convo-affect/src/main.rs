fn main() {
    std::process::exit(convo_affect::cli::main_with_args(std::env::args_os()));
}
