//! Per-path loss ledgers and what they imply for coincidence rates.

use entmux::ledger::{default_path_ledger, LossLedger, ANALYZER_ELEMENT};

fn main() -> entmux::Result<()> {
    for (path, passes) in [("T1", 1), ("T2", 2), ("T3", 2)] {
        let ledger = default_path_ledger(passes);
        let t = ledger.transmittance();
        println!("{path}: {ledger}");
        println!("    total {} dB, transmittance {t:.5}, pair survival {:.2e}", ledger.total_db(), t * t);
        let bare = ledger.without(ANALYZER_ELEMENT);
        println!("    without analyzer {} dB", bare.total_db());
    }

    // a hand-written ledger, e.g. for a shorter test bench
    let bench = LossLedger::parse("fiber 0.4, filter 1.2, detector 1.5")?;
    println!("bench: {} dB -> {:.4}", bench.total_db(), bench.transmittance());
    Ok(())
}
