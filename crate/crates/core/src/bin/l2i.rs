fn main() { println!("cli not wired yet"); }
