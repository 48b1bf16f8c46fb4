//! Kernel breakdown of the preset models: FLOPs, weight bytes and how much of
//! the matrix work sits in the fully connected kernels.

use hetnoi::workload::{fc_dominance, intermediate_storage_ratio, kernel_sequence, presets, SequenceConfig};

fn main() {
    let seq = SequenceConfig::new(512).expect("positive length");
    println!("{:<12} {:>7} {:>12} {:>12} {:>8} {:>10}", "model", "kernels", "GFLOP", "weights MB", "fc", "storage");
    for m in presets() {
        let ks = kernel_sequence(&m, &seq);
        let flops: u64 = ks.iter().map(|k| k.flops).sum();
        let weights: u64 = ks.iter().map(|k| k.weight_bytes).sum();
        println!(
            "{:<12} {:>7} {:>12.1} {:>12.1} {:>8.4} {:>10.4}",
            m.name,
            ks.len(),
            flops as f64 / 1e9,
            weights as f64 / 1e6,
            fc_dominance(&m, &seq),
            intermediate_storage_ratio(&m, &seq),
        );
    }
}
