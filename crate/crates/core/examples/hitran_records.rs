//! Round-trips a line through the fixed-width 160-column record layout.

use terasense::physics::{format_hitran_record, parse_hitran, LineDatabase, PhysicalConstants};

fn main() -> terasense::Result<()> {
    let consts = PhysicalConstants::default();
    let db = LineDatabase::builtin(&consts);
    let line = db.lines("H2O")[0].clone();
    let record = format_hitran_record(&line, &consts);
    println!("{record}");
    let back = parse_hitran(&record, &consts)?;
    println!("{:#?}", back[0]);

    let broken = &record[..40];
    match parse_hitran(broken, &consts) {
        Err(e) => println!("truncated record rejected: {e}"),
        Ok(_) => println!("truncated record unexpectedly accepted"),
    }
    Ok(())
}
