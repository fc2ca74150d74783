//! Reading and writing the plain-text class format.

use radcomplex::estimator::complexity_vector;
use radcomplex::io::{format_class, load_class_file, parse_class, save_class_file};
use radcomplex::ExpectationEngine;
use std::path::Path;

const FINITE: &str = "\
# two tables on two points
kind = finite
n = 2
k = 2

1 0
0 1

0 1
1 0
";

fn main() -> radcomplex::Result<()> {
    let class = parse_class(FINITE, Path::new("inline"))?;
    println!("parsed a {} class with {:?} members", class.kind_name(), class.cardinality());
    println!("complexity {}", complexity_vector(&class, &ExpectationEngine::exact())?.mean);

    let dir = std::env::temp_dir().join("radcomplex-class-files");
    std::fs::create_dir_all(&dir).map_err(|source| radcomplex::Error::Io { path: dir.clone(), source })?;
    let path = dir.join("finite.txt");
    save_class_file(&class, &path)?;
    let back = load_class_file(&path)?;
    println!("round trip preserves the tables: {}", back.finite_tables() == class.finite_tables());
    print!("\n{}", format_class(&back));

    let bad = "kind = kmeans\nn = 2\nk = 3\nd = 2\n\n0.5 0.5\n1.0 0.7\n";
    match parse_class(bad, Path::new("centers.txt")) {
        Ok(_) => println!("unexpectedly accepted"),
        Err(e) => println!("\nrejected: {e}"),
    }
    Ok(())
}
