fn main() {
    std::process::exit(mdisp_cli::execute(std::env::args_os().collect()));
}
