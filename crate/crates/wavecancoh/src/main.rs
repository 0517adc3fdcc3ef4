fn main() {
    std::process::exit(wavecancoh::cli::main_entry(std::env::args()));
}
