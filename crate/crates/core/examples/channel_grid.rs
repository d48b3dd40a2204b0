//! Prints the signal/idler pairing around the pump and checks that every
//! pair is placed symmetrically in frequency.

use entmux::grid::{energy_conservation_check, format_pair_table, ChannelGrid, DEFAULT_PUMP_CHANNEL};

fn main() -> entmux::Result<()> {
    let grid = ChannelGrid::default();
    let pump = grid.channel(DEFAULT_PUMP_CHANNEL)?;
    print!("{}", format_pair_table(&grid, pump)?);

    let pairs = grid.pairs(pump);
    let ok = pairs.iter().filter(|p| energy_conservation_check(p, pump)).count();
    println!("\n{ok}/{} pairs conserve energy about {pump}", pairs.len());
    Ok(())
}
