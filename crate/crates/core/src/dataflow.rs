//! Cycle-accounted streaming simulation of the accelerator datapath.
//!
//! One input sample enters per clock cycle. A per-channel window buffer
//! (`K x K` registers) backed by a shift buffer (`(K-1) x (W-K)` registers)
//! turns that stream into one candidate convolution window per cycle after a
//! warmup of `(K-1)*W + K - 1` cycles. Windows that straddle the seam
//! between image rows are emitted but tagged invalid, which keeps the
//! one-sample-per-cycle contract while matching the valid-window count.
//! Strides above one are applied by a downstream selector; the buffer itself
//! is inherently stride-1.
//!
//! All five register moves of a cycle read pre-cycle state and write
//! post-cycle state simultaneously, mirroring synchronous hardware; the
//! sequential emulation below orders its in-place updates so that every read
//! still observes pre-cycle values.

use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::fixedpoint::{Acc40, Fixed16};
use crate::parallel;
use crate::perf::LayerStats;
use crate::reference::{self, ActivationKind, FullyConnected, PoolKind};
use crate::tensor::{ConvGeometry, FeatureMap, KernelSet};
use crate::tree::{ReductionSchedule, TreeVariant};

/// Sliding-window line buffer over one `height x width` channel plane.
#[derive(Debug, Clone)]
pub struct WindowStream {
    kernel: usize,
    height: usize,
    width: usize,
    /// `kernel x kernel` register grid; column 0 holds the newest sample of
    /// each row, so the image-oriented view reverses columns.
    window: Vec<Fixed16>,
    /// `(kernel-1) x (width-kernel)` register grid delaying each row line.
    shift: Vec<Fixed16>,
    cycle: u64,
}

impl WindowStream {
    pub fn new(kernel: usize, height: usize, width: usize) -> Result<Self> {
        if kernel == 0 {
            return Err(Error::Dimension {
                what: "window kernel side must be at least 1".into(),
            });
        }
        if kernel > height || kernel > width {
            return Err(Error::KernelTooLarge {
                h: height,
                w: width,
                kh: kernel,
                kw: kernel,
            });
        }
        Ok(WindowStream {
            kernel,
            height,
            width,
            window: vec![Fixed16::ZERO; kernel * kernel],
            shift: vec![Fixed16::ZERO; (kernel - 1) * (width - kernel)],
            cycle: 0,
        })
    }

    #[inline]
    pub fn kernel(&self) -> usize {
        self.kernel
    }

    #[inline]
    pub fn cycle(&self) -> u64 {
        self.cycle
    }

    /// Warmup length: window contents are invalid for this many cycles.
    #[inline]
    pub fn warmup_cycles(&self) -> u64 {
        ((self.kernel - 1) * self.width + self.kernel - 1) as u64
    }

    /// Live register cells per channel: `K*K + (K-1)*(W-K)`, independent of
    /// the plane height.
    #[inline]
    pub fn storage_cells(&self) -> usize {
        self.kernel * self.kernel + (self.kernel - 1) * (self.width - self.kernel)
    }

    #[inline]
    pub fn is_exhausted(&self) -> bool {
        self.cycle >= (self.height * self.width) as u64
    }

    /// Advances one clock cycle, consuming the next row-major sample.
    ///
    /// The five concurrent register moves: the sample enters the bottom
    /// window row; both grids shift one column; each window row above the
    /// bottom is fed from its shift line, and each shift line is fed by the
    /// window row below it.
    pub fn step(&mut self, sample: Fixed16) -> Result<()> {
        if self.is_exhausted() {
            return Err(Error::StreamExhausted { cycles: self.cycle });
        }
        let k = self.kernel;
        let shift_len = self.width - k;
        for r in 0..k - 1 {
            // Read the value leaving the window row below before that row
            // shifts (rows are processed top-down, so it is still pre-cycle).
            let below_exit = self.window[(r + 1) * k + (k - 1)];
            let incoming = if shift_len > 0 {
                let line = &mut self.shift[r * shift_len..(r + 1) * shift_len];
                let exit = line[shift_len - 1];
                for c in (1..shift_len).rev() {
                    line[c] = line[c - 1];
                }
                line[0] = below_exit;
                exit
            } else {
                // Zero-length shift line: the row below feeds directly.
                below_exit
            };
            let row = &mut self.window[r * k..(r + 1) * k];
            for c in (1..k).rev() {
                row[c] = row[c - 1];
            }
            row[0] = incoming;
        }
        let bottom = &mut self.window[(k - 1) * k..];
        for c in (1..k).rev() {
            bottom[c] = bottom[c - 1];
        }
        bottom[0] = sample;
        self.cycle += 1;
        Ok(())
    }

    /// Current window contents in image orientation (row-major, columns in
    /// ascending image order). Meaningful only once the warmup has passed.
    pub fn window_grid(&self) -> Vec<Fixed16> {
        let k = self.kernel;
        let mut out = Vec::with_capacity(k * k);
        for r in 0..k {
            for c in 0..k {
                out.push(self.window[r * k + (k - 1 - c)]);
            }
        }
        out
    }

    /// Anchor (top-left corner, 0-based) of the in-bounds window currently
    /// held, or `None` during warmup / while straddling a row seam.
    pub fn valid_anchor(&self) -> Option<(usize, usize)> {
        let warmup = self.warmup_cycles();
        if self.cycle <= warmup {
            return None;
        }
        let q = (self.cycle - warmup - 1) as usize;
        let row = q / self.width;
        let col = q % self.width;
        (row + self.kernel <= self.height && col + self.kernel <= self.width).then_some((row, col))
    }
}

/// Per-cycle record of what the window buffer held.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceEntry {
    pub cycle: u64,
    /// 1-based ordinal among the stride-1 valid windows; 0 when invalid.
    pub ordinal: u64,
    pub valid: bool,
    /// 0-based window anchor, present only on valid cycles.
    pub anchor: Option<(usize, usize)>,
}

/// Full streaming record of one channel plane: one entry per clock cycle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleTrace {
    pub kernel: usize,
    pub height: usize,
    pub width: usize,
    pub entries: Vec<TraceEntry>,
}

impl CycleTrace {
    /// Total streaming cycles, always `height * width`.
    pub fn total_cycles(&self) -> u64 {
        self.entries.len() as u64
    }

    pub fn valid_count(&self) -> usize {
        self.entries.iter().filter(|e| e.valid).count()
    }

    pub fn warmup_cycles(&self) -> u64 {
        ((self.kernel - 1) * self.width + self.kernel - 1) as u64
    }

    /// CSV export. Ordinals and anchors are written 1-based to match the
    /// window numbering convention; invalid cycles carry zeros.
    pub fn write_csv(&self, mut w: impl Write) -> io::Result<()> {
        writeln!(w, "cycle,window_ordinal,valid,anchor_row,anchor_col")?;
        for e in &self.entries {
            let (ar, ac) = e.anchor.map_or((0, 0), |(r, c)| (r + 1, c + 1));
            writeln!(
                w,
                "{},{},{},{},{}",
                e.cycle, e.ordinal, e.valid as u8, ar, ac
            )?;
        }
        Ok(())
    }
}

/// One valid window captured from the stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowSnapshot {
    /// 1-based ordinal among the stride-1 valid windows.
    pub ordinal: u64,
    pub cycle: u64,
    /// 0-based anchor (top-left corner in the plane).
    pub anchor: (usize, usize),
    /// Window contents in image orientation, `kernel * kernel` values.
    pub data: Vec<Fixed16>,
}

/// Streams a whole channel plane through the window buffer, recording every
/// cycle and snapshotting every valid stride-1 window.
pub fn stream_windows(
    plane: &[Fixed16],
    height: usize,
    width: usize,
    kernel: usize,
) -> Result<(CycleTrace, Vec<WindowSnapshot>)> {
    if plane.len() != height * width {
        return Err(Error::LengthMismatch {
            expected: height * width,
            actual: plane.len(),
        });
    }
    let mut stream = WindowStream::new(kernel, height, width)?;
    let out_w = width - kernel + 1;
    let mut entries = Vec::with_capacity(plane.len());
    let mut snapshots = Vec::new();
    for &sample in plane {
        stream.step(sample)?;
        let cycle = stream.cycle();
        match stream.valid_anchor() {
            Some((r, c)) => {
                let ordinal = (r * out_w + c + 1) as u64;
                entries.push(TraceEntry {
                    cycle,
                    ordinal,
                    valid: true,
                    anchor: Some((r, c)),
                });
                snapshots.push(WindowSnapshot {
                    ordinal,
                    cycle,
                    anchor: (r, c),
                    data: stream.window_grid(),
                });
            }
            None => entries.push(TraceEntry {
                cycle,
                ordinal: 0,
                valid: false,
                anchor: None,
            }),
        }
    }
    Ok((
        CycleTrace {
            kernel,
            height,
            width,
            entries,
        },
        snapshots,
    ))
}

/// Keeps the windows whose anchors lie on the stride lattice.
///
/// The stream is inherently stride-1; strided layers discard windows here.
/// Panics if a stride is zero (callers validate geometry first).
pub fn select_strided(
    windows: &[WindowSnapshot],
    stride_h: usize,
    stride_w: usize,
) -> Vec<WindowSnapshot> {
    assert!(stride_h >= 1 && stride_w >= 1, "strides must be at least 1");
    windows
        .iter()
        .filter(|w| w.anchor.0 % stride_h == 0 && w.anchor.1 % stride_w == 0)
        .cloned()
        .collect()
}

/// Bank of one wide accumulator register per output channel, with a
/// per-register count of how many channel contributions it has absorbed.
#[derive(Debug, Clone)]
pub struct AccumulatorBank {
    regs: Vec<Acc40>,
    counts: Vec<usize>,
}

impl AccumulatorBank {
    pub fn new(outputs: usize) -> Self {
        AccumulatorBank {
            regs: vec![Acc40::ZERO; outputs],
            counts: vec![0; outputs],
        }
    }

    #[inline]
    pub fn add(&mut self, m: usize, value: Acc40) {
        self.regs[m] += value;
        self.counts[m] += 1;
    }

    /// Adds one full output-channel component (all `M` values of one input
    /// channel) into the bank.
    pub fn accumulate_component(&mut self, component: &[Acc40]) -> Result<()> {
        if component.len() != self.regs.len() {
            return Err(Error::LengthMismatch {
                expected: self.regs.len(),
                actual: component.len(),
            });
        }
        for (m, &v) in component.iter().enumerate() {
            self.add(m, v);
        }
        Ok(())
    }

    /// Contributions register `m` has accumulated so far.
    #[inline]
    pub fn channel_count(&self, m: usize) -> usize {
        self.counts[m]
    }

    /// Adds the bias vector and returns the wide outputs.
    pub fn finish(mut self, biases: &[Fixed16]) -> Result<Vec<Acc40>> {
        if biases.len() != self.regs.len() {
            return Err(Error::LengthMismatch {
                expected: self.regs.len(),
                actual: biases.len(),
            });
        }
        for (reg, b) in self.regs.iter_mut().zip(biases) {
            *reg += b.widen();
        }
        Ok(self.regs)
    }
}

/// How one layer run drives the engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PipelineConfig {
    pub stride_h: usize,
    pub stride_w: usize,
    pub variant: TreeVariant,
    /// Input channels processed concurrently; `None` means all of them.
    pub pn: Option<usize>,
    /// Output channels processed concurrently; `None` means all of them.
    pub pm: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            stride_h: 1,
            stride_w: 1,
            variant: TreeVariant::Improved,
            pn: None,
            pm: None,
        }
    }
}

struct StridedWindow {
    out_row: usize,
    out_col: usize,
    /// All input-channel windows, image-oriented, `channels * k * k` values.
    data: Vec<Fixed16>,
}

/// Runs one convolution layer through the streaming engine.
///
/// All input-channel streams advance in lockstep on one shared cycle
/// counter. Each valid strided window is evaluated by `Pn * Pm` multiply-add
/// trees per pass (time-multiplexed over `ceil(N/Pn) * ceil(M/Pm)` passes
/// when parallelism is partial) feeding the accumulator bank, with the bias
/// added last. The output is bit-exact equal to
/// [`reference::conv_reference`] for every configuration.
///
/// Cycle model: streaming costs `H*W` cycles plus `(passes - 1)` stall
/// cycles per selected window while the engine back-pressures the input;
/// the drain adds the tree depth plus one accumulate and one bias cycle.
pub fn run_layer(
    x: &FeatureMap,
    k: &KernelSet,
    cfg: &PipelineConfig,
) -> Result<(FeatureMap, LayerStats)> {
    if x.channels() != k.channels() {
        return Err(Error::ShapeMismatch {
            what: format!(
                "input has {} channels but kernels expect {}",
                x.channels(),
                k.channels()
            ),
        });
    }
    if k.kernel_h() != k.kernel_w() {
        return Err(Error::NonSquareKernel {
            kh: k.kernel_h(),
            kw: k.kernel_w(),
        });
    }
    let kk = k.kernel_h();
    let (channels, kernels) = (x.channels(), k.kernels());
    let geo = ConvGeometry::new(x.height(), x.width(), kk, kk, cfg.stride_h, cfg.stride_w)?;
    let pn = resolve_parallelism("pn", cfg.pn, channels)?;
    let pm = resolve_parallelism("pm", cfg.pm, kernels)?;

    // Lockstep streaming of all input channels; one shared cycle counter.
    let mut streams = Vec::with_capacity(channels);
    for _ in 0..channels {
        streams.push(WindowStream::new(kk, x.height(), x.width())?);
    }
    let mut windows: Vec<StridedWindow> = Vec::with_capacity(geo.window_count() as usize);
    for idx in 0..x.height() * x.width() {
        for (n, stream) in streams.iter_mut().enumerate() {
            stream.step(x.plane(n)[idx])?;
        }
        if let Some((r, c)) = streams[0].valid_anchor() {
            if r % cfg.stride_h == 0 && c % cfg.stride_w == 0 {
                let mut data = Vec::with_capacity(channels * kk * kk);
                for stream in &streams {
                    data.extend(stream.window_grid());
                }
                windows.push(StridedWindow {
                    out_row: r / cfg.stride_h,
                    out_col: c / cfg.stride_w,
                    data,
                });
            }
        }
    }
    debug_assert_eq!(windows.len() as u64, geo.window_count());

    let schedule = ReductionSchedule::build(cfg.variant, kk * kk)?;
    let window_cells = kk * kk;
    let results: Vec<Vec<Fixed16>> = parallel::map_collect(&windows, 8, |win| {
        let mut bank = AccumulatorBank::new(kernels);
        for m0 in (0..kernels).step_by(pm) {
            let m_end = (m0 + pm).min(kernels);
            for n0 in (0..channels).step_by(pn) {
                let n_end = (n0 + pn).min(channels);
                for m in m0..m_end {
                    for n in n0..n_end {
                        let window = &win.data[n * window_cells..(n + 1) * window_cells];
                        let a = schedule
                            .multiply_add(window, k.channel_plane(m, n))
                            .expect("window and kernel shapes already validated");
                        bank.add(m, a);
                    }
                }
            }
        }
        debug_assert!((0..kernels).all(|m| bank.channel_count(m) == channels));
        let wide = bank.finish(k.biases()).expect("bank sized to kernel count");
        wide.into_iter().map(Acc40::narrow).collect()
    });

    let plane = geo.out_h * geo.out_w;
    let mut out = vec![Fixed16::ZERO; kernels * plane];
    for (win, values) in windows.iter().zip(&results) {
        for (m, &v) in values.iter().enumerate() {
            out[m * plane + win.out_row * geo.out_w + win.out_col] = v;
        }
    }

    let stats = layer_stats(x, k, &geo, cfg.variant, pn, pm);
    Ok((FeatureMap::new(kernels, geo.out_h, geo.out_w, out)?, stats))
}

fn resolve_parallelism(name: &str, requested: Option<usize>, extent: usize) -> Result<usize> {
    let value = requested.unwrap_or(extent);
    if value == 0 || value > extent {
        return Err(Error::Parallelism {
            what: format!("{} must be in [1, {}], got {}", name, extent, value),
        });
    }
    Ok(value)
}

fn layer_stats(
    x: &FeatureMap,
    k: &KernelSet,
    geo: &ConvGeometry,
    variant: TreeVariant,
    pn: usize,
    pm: usize,
) -> LayerStats {
    let kk = k.kernel_h();
    let (channels, kernels) = (k.channels(), k.kernels());
    let windows = geo.window_count();
    let macs = crate::perf::count_layer_ops(kernels, channels, kk, windows).multiplications;
    let passes = (channels.div_ceil(pn) * kernels.div_ceil(pm)) as u64;
    let stream_cycles = (x.height() * x.width()) as u64 + (passes - 1) * windows;
    let tree = crate::tree::TreeCost::of(variant, kk * kk);
    let drain_cycles = tree.cycles as u64 + 2;
    let trees = (pn * pm) as u64;
    LayerStats {
        macs,
        ops: 2 * macs,
        stream_cycles,
        drain_cycles,
        cycles: stream_cycles + drain_cycles,
        tree_depth: tree.cycles,
        passes,
        multipliers: trees * (kk * kk) as u64,
        adders: trees * tree.adders + pm as u64,
        registers: trees * tree.registers
            + kernels as u64
            + (pn * (kk * kk + (kk - 1) * (x.width() - kk))) as u64,
    }
}

/// One stage of a feed-forward network description.
#[derive(Debug, Clone)]
pub enum NetworkLayer {
    Conv {
        kernels: KernelSet,
        stride_h: usize,
        stride_w: usize,
    },
    Activation {
        kind: ActivationKind,
    },
    Pool {
        kind: PoolKind,
        size: usize,
        stride: usize,
    },
    FullyConnected {
        layer: FullyConnected,
    },
}

impl NetworkLayer {
    pub fn kind_name(&self) -> &'static str {
        match self {
            NetworkLayer::Conv { .. } => "conv",
            NetworkLayer::Activation { .. } => "activation",
            NetworkLayer::Pool { .. } => "pool",
            NetworkLayer::FullyConnected { .. } => "fully_connected",
        }
    }

    pub fn parameter_count(&self) -> u64 {
        match self {
            NetworkLayer::Conv { kernels, .. } => kernels.parameter_count(),
            NetworkLayer::FullyConnected { layer } => layer.parameter_count(),
            _ => 0,
        }
    }
}

/// Per-layer slice of a network run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerReport {
    pub index: usize,
    pub kind: &'static str,
    pub out_channels: usize,
    pub out_height: usize,
    pub out_width: usize,
    pub params: u64,
    pub macs: u64,
    pub ops: u64,
    /// Modeled engine cycles; zero for stages the engine does not model
    /// (activation, pooling, fully connected).
    pub cycles: u64,
    pub multipliers: u64,
    pub adders: u64,
    pub registers: u64,
}

/// Aggregate of one network run. Cycle totals cover the convolution stages,
/// the only ones the streaming engine models.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NetworkStats {
    pub layers: Vec<LayerReport>,
    pub total_params: u64,
    pub total_macs: u64,
    pub total_ops: u64,
    /// Ops executed on the modeled engine (convolution stages only).
    pub engine_ops: u64,
    /// Cycles spent in the modeled engine (convolution stages only).
    pub engine_cycles: u64,
}

/// Runs the network with convolutions on the streaming engine.
///
/// `pn` / `pm` are clamped per layer to that layer's channel counts.
pub fn run_network(
    x: &FeatureMap,
    layers: &[NetworkLayer],
    variant: TreeVariant,
    pn: Option<usize>,
    pm: Option<usize>,
) -> Result<(Vec<Fixed16>, NetworkStats)> {
    walk_network(x, layers, |_, fm, kernels, stride_h, stride_w| {
        let cfg = PipelineConfig {
            stride_h,
            stride_w,
            variant,
            pn: pn.map(|p| p.min(fm.channels())),
            pm: pm.map(|p| p.min(kernels.kernels())),
        };
        run_layer(fm, kernels, &cfg)
    })
}

/// Runs the network entirely through the direct-evaluation reference path.
pub fn run_network_reference(x: &FeatureMap, layers: &[NetworkLayer]) -> Result<Vec<Fixed16>> {
    let zero = LayerStats {
        macs: 0,
        ops: 0,
        stream_cycles: 0,
        drain_cycles: 0,
        cycles: 0,
        tree_depth: 0,
        passes: 1,
        multipliers: 0,
        adders: 0,
        registers: 0,
    };
    let (scores, _) = walk_network(x, layers, |_, fm, kernels, sh, sw| {
        Ok((reference::conv_reference(fm, kernels, sh, sw)?, zero))
    })?;
    Ok(scores)
}

/// Shared chain walker so both paths apply identical shape rules.
fn walk_network(
    x: &FeatureMap,
    layers: &[NetworkLayer],
    mut conv: impl FnMut(
        usize,
        &FeatureMap,
        &KernelSet,
        usize,
        usize,
    ) -> Result<(FeatureMap, LayerStats)>,
) -> Result<(Vec<Fixed16>, NetworkStats)> {
    let chain_err = |index: usize, kind: &'static str, e: Error| Error::LayerChain {
        index,
        kind,
        what: e.to_string(),
    };
    let mut current = x.clone();
    let mut scores: Option<Vec<Fixed16>> = None;
    let mut stats = NetworkStats::default();
    for (index, layer) in layers.iter().enumerate() {
        let kind = layer.kind_name();
        if scores.is_some() {
            return Err(Error::LayerChain {
                index,
                kind,
                what: "no layers may follow the fully connected stage".into(),
            });
        }
        let report = match layer {
            NetworkLayer::Conv {
                kernels,
                stride_h,
                stride_w,
            } => {
                let (fm, layer_stats) = conv(index, &current, kernels, *stride_h, *stride_w)
                    .map_err(|e| chain_err(index, kind, e))?;
                let report = LayerReport {
                    index,
                    kind,
                    out_channels: fm.channels(),
                    out_height: fm.height(),
                    out_width: fm.width(),
                    params: kernels.parameter_count(),
                    macs: layer_stats.macs,
                    ops: layer_stats.ops,
                    cycles: layer_stats.cycles,
                    multipliers: layer_stats.multipliers,
                    adders: layer_stats.adders,
                    registers: layer_stats.registers,
                };
                stats.engine_ops += layer_stats.ops;
                stats.engine_cycles += layer_stats.cycles;
                current = fm;
                report
            }
            NetworkLayer::Activation { kind: act } => {
                current = reference::activation(&current, *act);
                LayerReport {
                    index,
                    kind,
                    out_channels: current.channels(),
                    out_height: current.height(),
                    out_width: current.width(),
                    params: 0,
                    macs: 0,
                    ops: 0,
                    cycles: 0,
                    multipliers: 0,
                    adders: 0,
                    registers: 0,
                }
            }
            NetworkLayer::Pool {
                kind: pool_kind,
                size,
                stride,
            } => {
                current = reference::pool(&current, *pool_kind, *size, *stride)
                    .map_err(|e| chain_err(index, kind, e))?;
                LayerReport {
                    index,
                    kind,
                    out_channels: current.channels(),
                    out_height: current.height(),
                    out_width: current.width(),
                    params: 0,
                    macs: 0,
                    ops: 0,
                    cycles: 0,
                    multipliers: 0,
                    adders: 0,
                    registers: 0,
                }
            }
            NetworkLayer::FullyConnected { layer: fc } => {
                let out = fc
                    .apply(current.data())
                    .map_err(|e| chain_err(index, kind, e))?;
                let macs = (fc.inputs() * fc.outputs()) as u64;
                let report = LayerReport {
                    index,
                    kind,
                    out_channels: fc.outputs(),
                    out_height: 1,
                    out_width: 1,
                    params: fc.parameter_count(),
                    macs,
                    ops: 2 * macs,
                    cycles: 0,
                    multipliers: 0,
                    adders: 0,
                    registers: 0,
                };
                scores = Some(out);
                report
            }
        };
        stats.total_params += report.params;
        stats.total_macs += report.macs;
        stats.total_ops += report.ops;
        stats.layers.push(report);
    }
    let scores = scores.ok_or_else(|| Error::LayerChain {
        index: layers.len(),
        kind: "end",
        what: "network must end with a fully connected stage".into(),
    })?;
    Ok((scores, stats))
}
