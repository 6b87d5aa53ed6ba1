//! Command-line entry point. See `star_see::experiments` for the campaign
//! machinery this drives.

fn main() {
    println!("star-see CLI: subcommands land with the experiments module");
}
