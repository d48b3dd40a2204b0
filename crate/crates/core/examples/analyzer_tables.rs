//! Joint arrival-slot tables behind two unbalanced analyzers, from the
//! closed form and from summing over all photon paths.

use std::f64::consts::PI;

use entmux::oracle::{analytic_fringe, brute_force_state_propagation};
use entmux::quantum::{analyzer_transform, pair_state_from_pump, pump_after_umi};

fn main() -> entmux::Result<()> {
    let names = ["E", "C", "L"];
    for phi_p in [0.0, PI / 4.0, PI / 2.0] {
        let state = pair_state_from_pump(&pump_after_umi(phi_p)?)?;
        let table = analyzer_transform(&state, 0.0, 0.0, 1.0)?;
        let paths = brute_force_state_propagation(phi_p, 0.0, 0.0)?;
        println!("pump phase {phi_p:.4}, total over all ports {:.6}", table.total());
        println!("      E        C        L");
        for (s, row) in table.monitored().iter().enumerate() {
            let cells: Vec<String> = row.iter().map(|p| format!("{p:.5}")).collect();
            println!("  {} {}", names[s], cells.join("  "));
        }
        let cc = analytic_fringe(phi_p, 0.0, 0.0, 1.0)?;
        println!("  CC closed form {cc:.6}, path sum {:.6}\n", paths[1][1]);
    }
    Ok(())
}
