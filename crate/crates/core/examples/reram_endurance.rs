//! Why attention stays on the SMs: crossbar writes needed if it ran in
//! ReRAM, against the cell endurance limit.

use hetnoi::workload::{preset, reram_write_load, ReramArray, SequenceConfig};

fn main() -> hetnoi::Result<()> {
    let array = ReramArray::default();
    println!("chiplet capacity {:.1} Mbit, endurance {:.0e} writes", array.capacity_bits() as f64 / 1e6, array.endurance_limit as f64);
    for name in ["BERT-Base", "BERT-Large", "Llama2-7B"] {
        let m = preset(name).expect("preset exists");
        for n in [128, 512, 2048] {
            let w = reram_write_load(&m, &SequenceConfig::new(n)?, &array)?;
            println!(
                "{name:<11} N={n:<5} {:>10.3e} cell writes/token {:>10.3e} per encoder  exceeds = {}",
                w.cell_writes_per_token, w.cell_writes_per_encoder, w.exceeds_endurance
            );
        }
    }
    Ok(())
}
