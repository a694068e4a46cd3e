//! Loads reference data from the line-oriented fixture format, reseeds it
//! idempotently and exports it back out.

use rxtropic_core::clock::ManualClock;
use rxtropic_core::fixture;
use rxtropic_core::store::Store;
use rxtropic_core::tooling;

const EXTRA: &str = "\
# one more disease and a drug for it
DISEASE|Onchocerciasis|River blindness, a filarial infection
DRUG|Ivermectin|anthelmintic|Macrocyclic lactone|Onchocerciasis|Dizziness, pruritus|3mg tablet|ivermectin
RULE|Ivermectin|Quinine|MINOR|demo rule
";

pub fn run_example() -> rxtropic_core::Result<()> {
    let store = Store::in_memory()?;
    let clock = ManualClock::default();

    let report = tooling::seed(&store, &clock, &fixture::default_fixture())?;
    print!("first seed\n{report}");
    let report = tooling::seed(&store, &clock, &fixture::default_fixture())?;
    print!("second seed\n{report}");
    assert!(!report.changed());

    // References may point at records that are already stored.
    let extra = fixture::parse(EXTRA)?;
    print!("extra\n{}", tooling::seed(&store, &clock, &extra)?);

    match fixture::parse("DISEASE|Malaria|\nDRUG|X|c|d|Malaria|a|s\n") {
        Err(e) => println!("bad fixture: {} {e}", e.code()),
        Ok(_) => unreachable!(),
    }

    let exported = tooling::export_fixture(&store)?;
    let text = fixture::format(&exported);
    println!("\nexported {} lines:", text.lines().count());
    for line in text.lines().filter(|l| l.starts_with("DISEASE")) {
        println!("  {line}");
    }
    assert_eq!(fixture::parse(&text)?, exported);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
