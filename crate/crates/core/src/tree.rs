//! Layered 2-input adder trees for reducing a batch of wide products to one
//! sum, in two layouts:
//!
//! * classic — the input row is zero-padded up to the next power of two and
//!   every node is a 2-input adder;
//! * improved — no padding; a layer of `m` values uses `m/2` adders and, when
//!   `m` is odd, forwards the leftover value straight to the next layer.
//!
//! Both layouts finish in `ceil(log2(inputs))` layers and produce identical
//! sums (exact integer accumulation); they differ only in adder and register
//! cost. Costs are counted from the built structure; the closed forms on
//! [`TreeCost`] are checked against that count in the tests.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::fixedpoint::{Acc40, Fixed16};

/// Tree layout selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum TreeVariant {
    Classic,
    #[default]
    Improved,
}

impl TreeVariant {
    pub fn name(self) -> &'static str {
        match self {
            TreeVariant::Classic => "classic",
            TreeVariant::Improved => "improved",
        }
    }
}

/// One node of a reduction layer; indices point into the previous layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeNode {
    Add(usize, usize),
    Pass(usize),
}

/// A built reduction tree: the wiring of every layer, ready to evaluate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionSchedule {
    variant: TreeVariant,
    input_count: usize,
    input_slots: usize,
    layers: Vec<Vec<TreeNode>>,
}

impl ReductionSchedule {
    pub fn build(variant: TreeVariant, inputs: usize) -> Result<Self> {
        match variant {
            TreeVariant::Classic => Self::classic(inputs),
            TreeVariant::Improved => Self::improved(inputs),
        }
    }

    /// Zero-padded balanced binary tree over `2^ceil(log2(inputs))` slots.
    pub fn classic(inputs: usize) -> Result<Self> {
        if inputs == 0 {
            return Err(Error::EmptyReduction);
        }
        let slots = inputs.next_power_of_two();
        let mut layers = Vec::new();
        let mut width = slots;
        while width > 1 {
            layers.push(
                (0..width / 2)
                    .map(|p| TreeNode::Add(2 * p, 2 * p + 1))
                    .collect(),
            );
            width /= 2;
        }
        Ok(ReductionSchedule {
            variant: TreeVariant::Classic,
            input_count: inputs,
            input_slots: slots,
            layers,
        })
    }

    /// Pairwise tree without padding; an odd layer forwards its last value.
    pub fn improved(inputs: usize) -> Result<Self> {
        if inputs == 0 {
            return Err(Error::EmptyReduction);
        }
        let mut layers = Vec::new();
        let mut width = inputs;
        while width > 1 {
            let mut nodes: Vec<TreeNode> = (0..width / 2)
                .map(|p| TreeNode::Add(2 * p, 2 * p + 1))
                .collect();
            if width % 2 == 1 {
                // The leftover operand is always the last element and stays
                // last in the next layer, pinning one serialization order.
                nodes.push(TreeNode::Pass(width - 1));
            }
            layers.push(nodes);
            width = width / 2 + width % 2;
        }
        Ok(ReductionSchedule {
            variant: TreeVariant::Improved,
            input_count: inputs,
            input_slots: inputs,
            layers,
        })
    }

    #[inline]
    pub fn variant(&self) -> TreeVariant {
        self.variant
    }

    /// Number of real inputs the schedule reduces.
    #[inline]
    pub fn input_count(&self) -> usize {
        self.input_count
    }

    /// Width of the input register row (includes zero-padding slots for the
    /// classic layout).
    #[inline]
    pub fn input_slots(&self) -> usize {
        self.input_slots
    }

    #[inline]
    pub fn layers(&self) -> &[Vec<TreeNode>] {
        &self.layers
    }

    /// Register-row widths from the input layer down to the single output.
    pub fn layer_widths(&self) -> Vec<usize> {
        let mut widths = vec![self.input_slots];
        widths.extend(self.layers.iter().map(Vec::len));
        widths
    }

    /// Counts adders, registers (one per slot of every layer, input row
    /// included), and clock cycles (one per adder layer) from the structure.
    pub fn cost(&self) -> TreeCost {
        let adders = self
            .layers
            .iter()
            .flatten()
            .filter(|n| matches!(n, TreeNode::Add(..)))
            .count() as u64;
        let registers = self.layer_widths().iter().map(|&w| w as u64).sum();
        TreeCost {
            adders,
            registers,
            cycles: self.layers.len() as u32,
        }
    }

    /// Evaluates the tree over `values` exactly; classic padding slots
    /// contribute zero.
    pub fn reduce(&self, values: &[Acc40]) -> Result<Acc40> {
        if values.len() != self.input_count {
            return Err(Error::LengthMismatch {
                expected: self.input_count,
                actual: values.len(),
            });
        }
        let mut current = Vec::with_capacity(self.input_slots);
        current.extend_from_slice(values);
        current.resize(self.input_slots, Acc40::ZERO);
        for layer in &self.layers {
            current = layer
                .iter()
                .map(|node| match *node {
                    TreeNode::Add(a, b) => current[a] + current[b],
                    TreeNode::Pass(i) => current[i],
                })
                .collect();
        }
        Ok(current[0])
    }

    /// Multiplies window and kernel elementwise, then reduces the products
    /// through this tree. Both slices must have `input_count` elements.
    pub fn multiply_add(&self, window: &[Fixed16], kernel: &[Fixed16]) -> Result<Acc40> {
        if window.len() != kernel.len() {
            return Err(Error::LengthMismatch {
                expected: kernel.len(),
                actual: window.len(),
            });
        }
        let products: Vec<Acc40> = window.iter().zip(kernel).map(|(&x, &w)| x * w).collect();
        self.reduce(&products)
    }

    /// Structured text form: one line per layer listing node arities.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        writeln!(out, "variant: {}", self.variant.name()).unwrap();
        writeln!(out, "inputs: {}", self.input_count).unwrap();
        writeln!(
            out,
            "slots: {} ({} inputs + {} zero padding)",
            self.input_slots,
            self.input_count,
            self.input_slots - self.input_count
        )
        .unwrap();
        for (i, layer) in self.layers.iter().enumerate() {
            write!(out, "layer {}:", i + 1).unwrap();
            for node in layer {
                match node {
                    TreeNode::Add(a, b) => write!(out, " add({},{})", a, b).unwrap(),
                    TreeNode::Pass(i) => write!(out, " pass({})", i).unwrap(),
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Resource and latency cost of one reduction tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeCost {
    pub adders: u64,
    pub registers: u64,
    pub cycles: u32,
}

impl TreeCost {
    /// Closed form for the classic layout over `inputs >= 1` values.
    pub fn classic(inputs: usize) -> TreeCost {
        let depth = ceil_log2(inputs);
        TreeCost {
            adders: (1u64 << depth) - 1,
            registers: (1u64 << (depth + 1)) - 1,
            cycles: depth,
        }
    }

    /// Closed form for the improved layout over `inputs >= 1` values.
    pub fn improved(inputs: usize) -> TreeCost {
        let mut registers = 0u64;
        let mut width = inputs;
        loop {
            registers += width as u64;
            if width == 1 {
                break;
            }
            width = width / 2 + width % 2;
        }
        TreeCost {
            adders: inputs as u64 - 1,
            registers,
            cycles: ceil_log2(inputs),
        }
    }

    pub fn of(variant: TreeVariant, inputs: usize) -> TreeCost {
        match variant {
            TreeVariant::Classic => TreeCost::classic(inputs),
            TreeVariant::Improved => TreeCost::improved(inputs),
        }
    }
}

/// Builds the requested tree over `window.len()` products and evaluates it.
pub fn multiply_add_tree(
    window: &[Fixed16],
    kernel: &[Fixed16],
    variant: TreeVariant,
) -> Result<Acc40> {
    if window.is_empty() {
        return Err(Error::EmptyReduction);
    }
    ReductionSchedule::build(variant, window.len())?.multiply_add(window, kernel)
}

fn ceil_log2(n: usize) -> u32 {
    debug_assert!(n >= 1);
    n.next_power_of_two().trailing_zeros()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference::partial_sum;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn classic_nine_pads_to_sixteen_slots_with_four_layers() {
        let t = ReductionSchedule::classic(9).unwrap();
        assert_eq!(t.input_slots(), 16);
        assert_eq!(t.layer_widths(), vec![16, 8, 4, 2, 1]);
        assert_eq!(
            t.cost(),
            TreeCost {
                adders: 15,
                registers: 31,
                cycles: 4
            }
        );
    }

    #[test]
    fn single_input_needs_no_layers() {
        for variant in [TreeVariant::Classic, TreeVariant::Improved] {
            let t = ReductionSchedule::build(variant, 1).unwrap();
            assert!(t.layers().is_empty());
            assert_eq!(
                t.cost(),
                TreeCost {
                    adders: 0,
                    registers: 1,
                    cycles: 0
                }
            );
            let v = Acc40::from_raw(1234);
            assert_eq!(t.reduce(&[v]).unwrap(), v);
        }
        assert!(matches!(
            ReductionSchedule::classic(0),
            Err(Error::EmptyReduction)
        ));
        assert!(matches!(
            ReductionSchedule::improved(0),
            Err(Error::EmptyReduction)
        ));
    }

    #[test]
    fn classic_seven_uses_eight_slots() {
        let t = ReductionSchedule::classic(7).unwrap();
        assert_eq!(t.layer_widths(), vec![8, 4, 2, 1]);
        assert_eq!(
            t.cost(),
            TreeCost {
                adders: 7,
                registers: 15,
                cycles: 3
            }
        );
    }

    #[test]
    fn improved_nine_layer_widths_and_cost() {
        let t = ReductionSchedule::improved(9).unwrap();
        assert_eq!(t.layer_widths(), vec![9, 5, 3, 2, 1]);
        assert_eq!(
            t.cost(),
            TreeCost {
                adders: 8,
                registers: 20,
                cycles: 4
            }
        );
    }

    #[test]
    fn improved_two_is_a_single_adder() {
        let t = ReductionSchedule::improved(2).unwrap();
        assert_eq!(t.layers(), &[vec![TreeNode::Add(0, 1)]]);
        assert_eq!(
            t.cost(),
            TreeCost {
                adders: 1,
                registers: 3,
                cycles: 1
            }
        );
    }

    #[test]
    fn improved_five_layers_and_adders() {
        let t = ReductionSchedule::improved(5).unwrap();
        assert_eq!(t.layer_widths(), vec![5, 3, 2, 1]);
        // 2 + 1 + 1 adders; registers 5+3+2+1.
        assert_eq!(
            t.cost(),
            TreeCost {
                adders: 4,
                registers: 11,
                cycles: 3
            }
        );
        // Passthrough sits after the adder pairs.
        assert_eq!(
            t.layers()[0],
            vec![TreeNode::Add(0, 1), TreeNode::Add(2, 3), TreeNode::Pass(4)]
        );
        assert_eq!(t.layers()[1], vec![TreeNode::Add(0, 1), TreeNode::Pass(2)]);
    }

    #[test]
    fn classic_cost_saturates_between_powers_of_two() {
        let c144 = ReductionSchedule::classic(144).unwrap().cost();
        let c256 = ReductionSchedule::classic(256).unwrap().cost();
        let want = TreeCost {
            adders: 255,
            registers: 511,
            cycles: 8,
        };
        assert_eq!(c144, want);
        assert_eq!(c256, want);
    }

    #[test]
    fn closed_forms_match_counted_costs_up_to_1024() {
        for n in 1..=1024usize {
            let classic = ReductionSchedule::classic(n).unwrap();
            let improved = ReductionSchedule::improved(n).unwrap();
            assert_eq!(classic.cost(), TreeCost::classic(n), "classic {}", n);
            assert_eq!(improved.cost(), TreeCost::improved(n), "improved {}", n);
            // Structural invariants.
            assert_eq!(improved.cost().adders, n as u64 - 1);
            assert_eq!(classic.cost().cycles, improved.cost().cycles);
            if n >= 2 {
                let c = classic.cost();
                let i = improved.cost();
                assert!(i.adders <= c.adders && i.registers <= c.registers);
                let equal = i.registers == c.registers;
                assert_eq!(equal, n.is_power_of_two(), "register equality at {}", n);
            }
            // Layer-width recurrence: w' = ceil(w / 2).
            let widths = improved.layer_widths();
            for pair in widths.windows(2) {
                assert_eq!(pair[1], pair[0].div_ceil(2));
            }
        }
    }

    #[test]
    fn reduce_examples() {
        for variant in [TreeVariant::Classic, TreeVariant::Improved] {
            let t = ReductionSchedule::build(variant, 9).unwrap();
            assert_eq!(t.reduce(&[Acc40::ZERO; 9]).unwrap(), Acc40::ZERO);
            let values: Vec<Acc40> = (1..=9).map(Acc40::from_raw).collect();
            assert_eq!(t.reduce(&values).unwrap().raw(), 45);
            assert!(t.reduce(&values[..5]).is_err());
        }
    }

    #[test]
    fn reduce_matches_sequential_fold_on_random_vectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(0xf01d);
        for _ in 0..2_000 {
            let n = rng.gen_range(1..=600);
            let values: Vec<Acc40> = (0..n)
                .map(|_| Acc40::from_raw(rng.gen_range(-(1i64 << 30)..(1i64 << 30))))
                .collect();
            let want: i64 = values.iter().map(|a| a.raw()).sum();
            for variant in [TreeVariant::Classic, TreeVariant::Improved] {
                let t = ReductionSchedule::build(variant, n).unwrap();
                assert_eq!(t.reduce(&values).unwrap().raw(), want);
            }
        }
    }

    #[test]
    fn multiply_add_tree_examples() {
        // K=1 is a bare product.
        let got = multiply_add_tree(
            &[Fixed16::quantize(1.5)],
            &[Fixed16::quantize(0.5)],
            TreeVariant::Improved,
        )
        .unwrap();
        assert_eq!(got.to_real(), 0.75);
        // K=3 all ones sums to 9.
        let ones = vec![Fixed16::ONE; 9];
        for variant in [TreeVariant::Classic, TreeVariant::Improved] {
            assert_eq!(
                multiply_add_tree(&ones, &ones, variant).unwrap().to_real(),
                9.0
            );
        }
        assert!(multiply_add_tree(&ones[..4], &ones, TreeVariant::Classic).is_err());
    }

    #[test]
    fn multiply_add_tree_equals_partial_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(0xbeef);
        for k in [3usize, 6] {
            for _ in 0..200 {
                let window: Vec<Fixed16> =
                    (0..k * k).map(|_| Fixed16::from_raw(rng.gen())).collect();
                let kernel: Vec<Fixed16> =
                    (0..k * k).map(|_| Fixed16::from_raw(rng.gen())).collect();
                let want = partial_sum(&window, &kernel).unwrap();
                for variant in [TreeVariant::Classic, TreeVariant::Improved] {
                    assert_eq!(multiply_add_tree(&window, &kernel, variant).unwrap(), want);
                }
            }
        }
    }

    #[test]
    fn every_input_feeds_exactly_one_node() {
        for n in 1..=128usize {
            for variant in [TreeVariant::Classic, TreeVariant::Improved] {
                let t = ReductionSchedule::build(variant, n).unwrap();
                let mut prev_width = t.input_slots();
                for layer in t.layers() {
                    let mut used = vec![0u32; prev_width];
                    for node in layer {
                        match *node {
                            TreeNode::Add(a, b) => {
                                used[a] += 1;
                                used[b] += 1;
                            }
                            TreeNode::Pass(i) => used[i] += 1,
                        }
                    }
                    assert!(used.iter().all(|&u| u == 1), "{:?} n={}", variant, n);
                    prev_width = layer.len();
                }
                assert_eq!(prev_width, 1);
            }
        }
    }

    #[test]
    fn dump_is_deterministic_and_structured() {
        let t = ReductionSchedule::improved(5).unwrap();
        let text = t.dump();
        assert!(text.contains("variant: improved"));
        assert!(text.contains("inputs: 5"));
        assert!(text.contains("layer 1: add(0,1) add(2,3) pass(4)"));
        assert_eq!(text, t.dump());
    }
}
