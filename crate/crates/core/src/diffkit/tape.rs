//! Reverse-mode tape over small dense matrices.
//!
//! Nodes are appended in evaluation order, so the node list is always
//! topologically sorted and a single reverse sweep accumulates adjoints.
//! Vectors are `1 × n` rows; a batch of vectors is an `n_batch × n` matrix.

use std::cell::{Cell, RefCell};
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use ndarray::{Array2, Axis};

use super::dual::{sigmoid, softplus};
use crate::{Error, Result};

/// Primitive operation recorded on the tape, with the ids of its inputs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Op {
    Leaf,
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Div(usize, usize),
    Neg(usize),
    Scale(usize, f64),
    Offset(usize, f64),
    Exp(usize),
    Log(usize),
    Tanh(usize),
    Softplus(usize),
    Sigmoid(usize),
    Square(usize),
    /// `a · wᵀ` for `a: n×k`, `w: m×k`.
    MatMulT(usize, usize),
    /// Adds a `1×m` row to every row of an `n×m` matrix.
    AddRow(usize, usize),
    /// Sum of all entries, `1×1`.
    Sum(usize),
    /// Per-row sums, `n×1`.
    SumRows(usize),
    /// A `rows×cols` block read row-major from the flattened input at `offset`.
    Slice {
        input: usize,
        offset: usize,
        rows: usize,
        cols: usize,
    },
}

struct Node {
    op: Op,
    value: Array2<f64>,
}

#[derive(Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
    first_non_finite: Cell<Option<usize>>,
}

/// Handle to a tape node.
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    id: usize,
}

impl fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Var({})", self.id)
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn push(&self, op: Op, value: Array2<f64>) -> Var<'_> {
        let mut nodes = self.nodes.borrow_mut();
        let id = nodes.len();
        if self.first_non_finite.get().is_none() && value.iter().any(|x| !x.is_finite()) {
            self.first_non_finite.set(Some(id));
        }
        nodes.push(Node { op, value });
        Var { tape: self, id }
    }

    pub fn leaf(&self, value: Array2<f64>) -> Var<'_> {
        self.push(Op::Leaf, value)
    }

    /// A `1 × n` row vector leaf.
    pub fn row(&self, values: &[f64]) -> Var<'_> {
        self.leaf(Array2::from_shape_vec((1, values.len()), values.to_vec()).expect("row shape"))
    }

    pub fn scalar(&self, value: f64) -> Var<'_> {
        self.leaf(Array2::from_elem((1, 1), value))
    }

    pub fn op(&self, id: usize) -> Op {
        self.nodes.borrow()[id].op
    }

    /// First node whose value was not finite, if any.
    pub fn first_non_finite(&self) -> Option<usize> {
        self.first_non_finite.get()
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.first_non_finite.get() {
            Some(node) => Err(Error::NonFiniteNode { node }),
            None => Ok(()),
        }
    }

    fn unary(&self, a: usize, op: Op, f: impl Fn(f64) -> f64) -> Var<'_> {
        let value = self.nodes.borrow()[a].value.mapv(f);
        self.push(op, value)
    }

    fn binary(&self, a: usize, b: usize, op: Op, f: impl Fn(f64, f64) -> f64) -> Var<'_> {
        let value = {
            let nodes = self.nodes.borrow();
            let (x, y) = (&nodes[a].value, &nodes[b].value);
            assert_eq!(x.dim(), y.dim(), "elementwise operands differ in shape");
            ndarray::Zip::from(x).and(y).map_collect(|&p, &q| f(p, q))
        };
        self.push(op, value)
    }

    /// Reverse sweep from a `1×1` output.
    pub fn gradient(&self, output: Var<'_>) -> Result<Gradients> {
        self.check_finite()?;
        let nodes = self.nodes.borrow();
        assert_eq!(nodes[output.id].value.dim(), (1, 1), "gradient needs a scalar output");
        let mut adj: Vec<Option<Array2<f64>>> = vec![None; nodes.len()];
        adj[output.id] = Some(Array2::ones((1, 1)));

        for id in (0..=output.id).rev() {
            let node = &nodes[id];
            if matches!(node.op, Op::Leaf) {
                continue;
            }
            let Some(g) = adj[id].take() else { continue };
            let val = |i: usize| &nodes[i].value;
            match node.op {
                Op::Leaf => {}
                Op::Add(a, b) => {
                    accumulate(&mut adj, a, &g);
                    accumulate(&mut adj, b, &g);
                }
                Op::Sub(a, b) => {
                    accumulate(&mut adj, a, &g);
                    accumulate(&mut adj, b, &(-&g));
                }
                Op::Mul(a, b) => {
                    accumulate(&mut adj, a, &(&g * val(b)));
                    accumulate(&mut adj, b, &(&g * val(a)));
                }
                Op::Div(a, b) => {
                    let gb = -(&g * &node.value) / val(b);
                    accumulate(&mut adj, a, &(&g / val(b)));
                    accumulate(&mut adj, b, &gb);
                }
                Op::Neg(a) => accumulate(&mut adj, a, &(-&g)),
                Op::Scale(a, c) => accumulate(&mut adj, a, &(&g * c)),
                Op::Offset(a, _) => accumulate(&mut adj, a, &g),
                Op::Exp(a) => accumulate(&mut adj, a, &(&g * &node.value)),
                Op::Log(a) => accumulate(&mut adj, a, &(&g / val(a))),
                Op::Tanh(a) => {
                    let local = node.value.mapv(|t| 1.0 - t * t);
                    accumulate(&mut adj, a, &(&g * &local));
                }
                Op::Softplus(a) => {
                    let local = val(a).mapv(sigmoid);
                    accumulate(&mut adj, a, &(&g * &local));
                }
                Op::Sigmoid(a) => {
                    let local = node.value.mapv(|s| s * (1.0 - s));
                    accumulate(&mut adj, a, &(&g * &local));
                }
                Op::Square(a) => accumulate(&mut adj, a, &(&g * &(val(a) * 2.0))),
                Op::MatMulT(a, w) => {
                    accumulate(&mut adj, a, &g.dot(val(w)));
                    accumulate(&mut adj, w, &g.t().dot(val(a)));
                }
                Op::AddRow(a, b) => {
                    accumulate(&mut adj, a, &g);
                    accumulate(&mut adj, b, &g.sum_axis(Axis(0)).insert_axis(Axis(0)));
                }
                Op::Sum(a) => {
                    let s = g[[0, 0]];
                    accumulate(&mut adj, a, &Array2::from_elem(val(a).dim(), s));
                }
                Op::SumRows(a) => {
                    let ga = g
                        .broadcast(val(a).dim())
                        .expect("column broadcast")
                        .to_owned();
                    accumulate(&mut adj, a, &ga);
                }
                Op::Slice {
                    input,
                    offset,
                    rows,
                    cols,
                } => {
                    let shape = val(input).dim();
                    let mut ga = Array2::zeros(shape);
                    {
                        let flat = ga.as_slice_mut().expect("standard layout");
                        let src = g.as_standard_layout();
                        let src = src.as_slice().expect("standard layout");
                        flat[offset..offset + rows * cols].copy_from_slice(src);
                    }
                    accumulate(&mut adj, input, &ga);
                }
            }
        }
        drop(nodes);
        let shapes = self.nodes.borrow().iter().map(|n| n.value.dim()).collect();
        Ok(Gradients { adj, shapes })
    }
}

fn accumulate(adj: &mut [Option<Array2<f64>>], id: usize, g: &Array2<f64>) {
    match &mut adj[id] {
        Some(existing) => *existing += g,
        slot @ None => *slot = Some(g.clone()),
    }
}

/// Adjoints from one reverse sweep.
pub struct Gradients {
    adj: Vec<Option<Array2<f64>>>,
    shapes: Vec<(usize, usize)>,
}

impl Gradients {
    /// ∂output/∂var; zero when the output does not depend on `var`.
    pub fn wrt(&self, var: Var<'_>) -> Array2<f64> {
        self.adj[var.id]
            .clone()
            .unwrap_or_else(|| Array2::zeros(self.shapes[var.id]))
    }
}

impl<'t> Var<'t> {
    pub fn id(self) -> usize {
        self.id
    }

    pub fn tape(self) -> &'t Tape {
        self.tape
    }

    pub fn value(self) -> Array2<f64> {
        self.tape.nodes.borrow()[self.id].value.clone()
    }

    pub fn dim(self) -> (usize, usize) {
        self.tape.nodes.borrow()[self.id].value.dim()
    }

    /// Value of a `1×1` node.
    pub fn scalar_value(self) -> f64 {
        let nodes = self.tape.nodes.borrow();
        let v = &nodes[self.id].value;
        assert_eq!(v.dim(), (1, 1), "not a scalar node");
        v[[0, 0]]
    }

    pub fn scale(self, c: f64) -> Var<'t> {
        self.tape.unary(self.id, Op::Scale(self.id, c), |x| x * c)
    }

    pub fn offset(self, c: f64) -> Var<'t> {
        self.tape.unary(self.id, Op::Offset(self.id, c), |x| x + c)
    }

    pub fn exp(self) -> Var<'t> {
        self.tape.unary(self.id, Op::Exp(self.id), f64::exp)
    }

    pub fn ln(self) -> Var<'t> {
        self.tape.unary(self.id, Op::Log(self.id), f64::ln)
    }

    pub fn tanh(self) -> Var<'t> {
        self.tape.unary(self.id, Op::Tanh(self.id), f64::tanh)
    }

    pub fn softplus(self) -> Var<'t> {
        self.tape.unary(self.id, Op::Softplus(self.id), softplus)
    }

    pub fn sigmoid(self) -> Var<'t> {
        self.tape.unary(self.id, Op::Sigmoid(self.id), sigmoid)
    }

    pub fn square(self) -> Var<'t> {
        self.tape.unary(self.id, Op::Square(self.id), |x| x * x)
    }

    /// `self · wᵀ`.
    pub fn matmul_t(self, w: Var<'t>) -> Var<'t> {
        let value = {
            let nodes = self.tape.nodes.borrow();
            let (a, w) = (&nodes[self.id].value, &nodes[w.id].value);
            assert_eq!(a.ncols(), w.ncols(), "matmul_t inner dimensions differ");
            a.dot(&w.t())
        };
        self.tape.push(Op::MatMulT(self.id, w.id), value)
    }

    pub fn add_row(self, row: Var<'t>) -> Var<'t> {
        let value = {
            let nodes = self.tape.nodes.borrow();
            let (a, b) = (&nodes[self.id].value, &nodes[row.id].value);
            assert_eq!(b.nrows(), 1, "add_row needs a single row");
            assert_eq!(a.ncols(), b.ncols(), "add_row width differs");
            a + b
        };
        self.tape.push(Op::AddRow(self.id, row.id), value)
    }

    /// `x · wᵀ + b`, the batched affine map.
    pub fn affine(self, w: Var<'t>, b: Var<'t>) -> Var<'t> {
        self.matmul_t(w).add_row(b)
    }

    pub fn sum(self) -> Var<'t> {
        let s = self.tape.nodes.borrow()[self.id].value.sum();
        self.tape.push(Op::Sum(self.id), Array2::from_elem((1, 1), s))
    }

    pub fn sum_rows(self) -> Var<'t> {
        let value = self.tape.nodes.borrow()[self.id]
            .value
            .sum_axis(Axis(1))
            .insert_axis(Axis(1));
        self.tape.push(Op::SumRows(self.id), value)
    }

    pub fn mean(self) -> Var<'t> {
        let (r, c) = self.dim();
        self.sum().scale(1.0 / (r * c) as f64)
    }

    /// Sum of the elementwise product.
    pub fn dot(self, other: Var<'t>) -> Var<'t> {
        (self * other).sum()
    }

    /// Per-row inner products of two equally shaped matrices, `n×1`.
    pub fn row_dot(self, other: Var<'t>) -> Var<'t> {
        (self * other).sum_rows()
    }

    /// Reads a `rows×cols` block from this node's row-major storage.
    pub fn slice(self, offset: usize, rows: usize, cols: usize) -> Var<'t> {
        let value = {
            let nodes = self.tape.nodes.borrow();
            let src = nodes[self.id].value.as_standard_layout();
            let flat = src.as_slice().expect("standard layout");
            assert!(offset + rows * cols <= flat.len(), "slice out of bounds");
            Array2::from_shape_vec((rows, cols), flat[offset..offset + rows * cols].to_vec())
                .expect("slice shape")
        };
        self.tape.push(
            Op::Slice {
                input: self.id,
                offset,
                rows,
                cols,
            },
            value,
        )
    }
}

macro_rules! binary_op {
    ($trait:ident, $method:ident, $variant:ident, $f:expr) => {
        impl<'t> $trait for Var<'t> {
            type Output = Var<'t>;
            fn $method(self, rhs: Var<'t>) -> Var<'t> {
                self.tape
                    .binary(self.id, rhs.id, Op::$variant(self.id, rhs.id), $f)
            }
        }
    };
}

binary_op!(Add, add, Add, |a, b| a + b);
binary_op!(Sub, sub, Sub, |a, b| a - b);
binary_op!(Mul, mul, Mul, |a, b| a * b);
binary_op!(Div, div, Div, |a, b| a / b);

impl<'t> Neg for Var<'t> {
    type Output = Var<'t>;
    fn neg(self) -> Var<'t> {
        self.tape.unary(self.id, Op::Neg(self.id), |x| -x)
    }
}
