fn main() {
    eprintln!("kplateau: not yet wired");
    std::process::exit(2);
}
