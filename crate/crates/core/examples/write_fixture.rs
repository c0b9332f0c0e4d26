//! Write the synthetic fixture corpus to a directory.
//!
//! cargo run -p refnet-core --example write_fixture -- <dir> [seed]

use std::path::PathBuf;

use refnet_core::fixture::{Fixture, DEFAULT_SEED};

fn main() {
    let mut args = std::env::args().skip(1);
    let Some(dir) = args.next().map(PathBuf::from) else {
        eprintln!("usage: write_fixture <dir> [seed]");
        std::process::exit(1);
    };
    let seed = args.next().map_or(DEFAULT_SEED, |s| {
        s.parse().expect("seed must be an integer")
    });
    let fixture = Fixture::generate(seed);
    match fixture.write(&dir) {
        Ok(config) => println!("{}", config.display()),
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(2);
        }
    }
}
