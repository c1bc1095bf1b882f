// Cuts a table column into fixed-shape micro tables with a sliding window.

use tabsema::sampler::extract_micro_tables;
use tabsema::table::{MicroTable, Table};

pub fn run_example() -> anyhow::Result<Vec<MicroTable>> {
    let table = Table::from_columns(
        "films",
        &[
            vec!["Alien", "Heat", "Fargo", "Se7en", "Brazil", "Gattaca", "Amelie"],
            vec!["Ridley Scott", "Michael Mann", "Joel Coen", "David Fincher", "Terry Gilliam", "Andrew Niccol", "Jean-Pierre Jeunet"],
            vec!["1979", "1995", "1996", "1995", "1985", "1997", "2001"],
        ],
    );
    // 7 rows and m = 5 give 3 windows; l = 4 pads two empty columns
    let windows = extract_micro_tables(&table, 0, 5, 4)?;
    for (i, mt) in windows.iter().enumerate() {
        let cells: Vec<&str> = mt.target.cells.iter().map(|c| c.raw_text.as_str()).collect();
        println!("window {i}: main cell {:?}, target {cells:?}", mt.main_cell().raw_text);
    }
    Ok(windows)
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example().map(|_| ())
}
