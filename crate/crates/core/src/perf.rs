//! Analytical operation counts, throughput arithmetic, and the
//! classic-vs-improved tree cost comparison.

use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::tree::{ReductionSchedule, TreeCost, TreeVariant};

/// Work of one convolution layer, counted from its geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OpCounts {
    /// `kernels * windows * channels * k^2` multiplications.
    pub multiplications: u64,
    /// `kernels * windows * (channels * k^2 + 1)` addends fed to summation
    /// (the products plus one bias word per output element).
    pub addition_inputs: u64,
}

/// Counts the multiply and addition work of one square-kernel layer.
pub fn count_layer_ops(
    kernels: usize,
    channels: usize,
    kernel_side: usize,
    windows: u64,
) -> OpCounts {
    let k2 = (kernel_side * kernel_side) as u64;
    let per_window_products = channels as u64 * k2;
    OpCounts {
        multiplications: kernels as u64 * windows * per_window_products,
        addition_inputs: kernels as u64 * windows * (per_window_products + 1),
    }
}

/// Simulated cost and resource footprint of one convolution layer.
///
/// `cycles = stream_cycles + drain_cycles`; GOPS accounting uses the total.
/// Resource counts describe the instantiated hardware: `trees` multiply-add
/// trees (one per concurrently processed (input channel, output channel)
/// pair), the window/shift storage of the concurrently streamed channels,
/// and the output accumulator bank.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerStats {
    /// Multiply-accumulate count: `channels * k^2 * windows * kernels`.
    pub macs: u64,
    /// Conventional operation count, `2 * macs`.
    pub ops: u64,
    /// Cycles to stream the input plane, including multiplexing stalls.
    pub stream_cycles: u64,
    /// Tree depth plus one accumulate plus one bias cycle.
    pub drain_cycles: u64,
    /// `stream_cycles + drain_cycles`.
    pub cycles: u64,
    /// Adder layers per tree, `ceil(log2(k^2))`.
    pub tree_depth: u32,
    /// Time-multiplexing passes per window,
    /// `ceil(N/Pn) * ceil(M/Pm)` (1 = fully parallel).
    pub passes: u64,
    pub multipliers: u64,
    pub adders: u64,
    pub registers: u64,
}

impl LayerStats {
    /// Throughput in GOPS at clock `f_clk_hz`.
    pub fn gops(&self, f_clk_hz: f64) -> Result<f64> {
        gops(self.ops, self.cycles, f_clk_hz)
    }
}

/// `ops / (cycles / f_clk) / 1e9`.
pub fn gops(ops: u64, cycles: u64, f_clk_hz: f64) -> Result<f64> {
    if cycles == 0 {
        return Err(Error::ZeroCycles);
    }
    Ok(ops as f64 / (cycles as f64 / f_clk_hz) / 1e9)
}

/// Seconds spent on `cycles` at clock `f_clk_hz`.
pub fn latency_seconds(cycles: u64, f_clk_hz: f64) -> f64 {
    cycles as f64 / f_clk_hz
}

/// Throughput next to the power draw it costs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EfficiencyReport {
    pub gops: f64,
    pub power_watts: f64,
    pub gops_per_watt: f64,
}

impl EfficiencyReport {
    /// Power is a user-supplied measurement; it must be positive.
    pub fn new(gops: f64, power_watts: f64) -> Result<Self> {
        if !power_watts.is_finite() || power_watts <= 0.0 {
            return Err(Error::Invalid {
                what: format!("power must be positive, got {}", power_watts),
            });
        }
        Ok(EfficiencyReport {
            gops,
            power_watts,
            gops_per_watt: gops / power_watts,
        })
    }
}

/// Cost of both tree layouts at one input count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeComparison {
    pub inputs: usize,
    pub classic: TreeCost,
    pub improved: TreeCost,
}

impl TreeComparison {
    pub fn adder_savings_pct(&self) -> f64 {
        savings_pct(self.classic.adders, self.improved.adders)
    }

    pub fn register_savings_pct(&self) -> f64 {
        savings_pct(self.classic.registers, self.improved.registers)
    }
}

fn savings_pct(classic: u64, improved: u64) -> f64 {
    if classic == 0 {
        return 0.0;
    }
    (classic - improved) as f64 / classic as f64 * 100.0
}

/// Builds both layouts for every input count in the range and counts their
/// cost from the built structure. Rows are computed on the worker pool when
/// the `parallel` feature is on.
pub fn compare_trees(inputs: impl IntoIterator<Item = usize>) -> Result<Vec<TreeComparison>> {
    let counts: Vec<usize> = inputs.into_iter().collect();
    crate::parallel::map_collect(&counts, 32, |&n| {
        Ok(TreeComparison {
            inputs: n,
            classic: ReductionSchedule::classic(n)?.cost(),
            improved: ReductionSchedule::improved(n)?.cost(),
        })
    })
    .into_iter()
    .collect()
}

/// Long-form cost table: one row per (inputs, variant).
pub fn write_cost_csv(rows: &[TreeComparison], mut w: impl Write) -> io::Result<()> {
    writeln!(w, "eta,variant,adders,registers,cycles")?;
    for row in rows {
        for (variant, cost) in [
            (TreeVariant::Classic, row.classic),
            (TreeVariant::Improved, row.improved),
        ] {
            writeln!(
                w,
                "{},{},{},{},{}",
                row.inputs,
                variant.name(),
                cost.adders,
                cost.registers,
                cost.cycles
            )?;
        }
    }
    Ok(())
}

/// Wide-form comparison table with savings percentages.
pub fn write_compare_csv(rows: &[TreeComparison], mut w: impl Write) -> io::Result<()> {
    writeln!(
        w,
        "eta,classic_adders,classic_registers,classic_cycles,\
         improved_adders,improved_registers,improved_cycles,\
         adder_savings_pct,register_savings_pct"
    )?;
    for row in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{:.2},{:.2}",
            row.inputs,
            row.classic.adders,
            row.classic.registers,
            row.classic.cycles,
            row.improved.adders,
            row.improved.registers,
            row.improved.cycles,
            row.adder_savings_pct(),
            row.register_savings_pct()
        )?;
    }
    Ok(())
}
