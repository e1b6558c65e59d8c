//! Operator products and the cumulant closure that evaluates them.
//!
//! Products are written normally ordered with field operators first, then
//! operators of distinct atoms labelled 1, 2. Same-atom products never appear
//! here: they are reduced exactly (σ⁺σ⁻ = (1+σᶻ)/2, ...) before a product is
//! requested.

use super::CoherentState;
use crate::C64;
use std::sync::OnceLock;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    A,
    Ad,
    Sp(u8),
    Sm(u8),
    Sz(u8),
}

pub trait Moments {
    /// ⟨product of `ops`⟩ in the written order.
    fn m(&self, ops: &[Op]) -> C64;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Closure {
    /// Third cumulant ⟨a†aσᶻ⟩_c kept as a dynamical variable.
    Full,
    /// All third and fourth cumulants dropped.
    Reduced,
}

pub struct ClosureMoments<'a> {
    pub s: &'a CoherentState,
    pub closure: Closure,
}

impl ClosureMoments<'_> {
    fn mean(&self, op: Op) -> C64 {
        let s = self.s;
        match op {
            Op::A => s.a,
            Op::Ad => s.a.conj(),
            Op::Sp(_) => s.sp,
            Op::Sm(_) => s.sp.conj(),
            Op::Sz(_) => C64::new(s.sz, 0.0),
        }
    }

    fn pair(&self, x: Op, y: Op) -> C64 {
        use Op::*;
        let s = self.s;
        let re = |v: f64| C64::new(v, 0.0);
        match (x, y) {
            (A, A) => s.adad.conj(),
            (Ad, Ad) => s.adad,
            (Ad, A) => re(s.ada),
            (A, Sp(_)) => s.a_sp,
            (A, Sm(_)) => s.a_sm,
            (A, Sz(_)) => s.a_sz,
            (Ad, Sp(_)) => s.a_sm.conj(),
            (Ad, Sm(_)) => s.a_sp.conj(),
            (Ad, Sz(_)) => s.a_sz.conj(),
            (Sp(i), Sm(j)) | (Sm(i), Sp(j)) if i != j => re(s.spsm),
            (Sm(i), Sm(j)) if i != j => s.smsm,
            (Sp(i), Sp(j)) if i != j => s.smsm.conj(),
            (Sz(i), Sp(j)) | (Sp(i), Sz(j)) if i != j => s.sz_sp,
            (Sz(i), Sm(j)) | (Sm(i), Sz(j)) if i != j => s.sz_sp.conj(),
            (Sz(i), Sz(j)) if i != j => re(s.sz_sz),
            _ => unreachable!("pair {x:?},{y:?} is not a closed cumulant"),
        }
    }

    fn triple(&self, x: Op, y: Op, z: Op) -> Option<C64> {
        match (self.closure, x, y, z) {
            (Closure::Full, Op::Ad, Op::A, Op::Sz(_)) => {
                let expanded = self.pair(Op::Ad, Op::A) * self.mean(z)
                    + self.pair(Op::Ad, z) * self.mean(Op::A)
                    + self.pair(Op::A, z) * self.mean(Op::Ad)
                    + self.mean(Op::Ad) * self.mean(Op::A) * self.mean(z);
                Some(C64::new(self.s.adasz, 0.0) - expanded)
            }
            _ => None,
        }
    }
}

impl Moments for ClosureMoments<'_> {
    fn m(&self, ops: &[Op]) -> C64 {
        match ops.len() {
            0 => C64::new(1.0, 0.0),
            1 => self.mean(ops[0]),
            2 => self.pair(ops[0], ops[1]) + self.mean(ops[0]) * self.mean(ops[1]),
            k => {
                let mut total = C64::new(0.0, 0.0);
                'part: for part in partitions(k) {
                    let mut prod = C64::new(1.0, 0.0);
                    for block in part {
                        let v = match block.as_slice() {
                            [i] => self.mean(ops[*i]),
                            [i, j] => self.pair(ops[*i], ops[*j]),
                            [i, j, l] => match self.triple(ops[*i], ops[*j], ops[*l]) {
                                Some(v) => v,
                                None => continue 'part,
                            },
                            _ => continue 'part,
                        };
                        prod *= v;
                    }
                    total += prod;
                }
                total
            }
        }
    }
}

type Partition = Vec<Vec<usize>>;

/// Set partitions of {0..k} for k = 3, 4.
fn partitions(k: usize) -> &'static [Partition] {
    static P3: OnceLock<Vec<Partition>> = OnceLock::new();
    static P4: OnceLock<Vec<Partition>> = OnceLock::new();
    match k {
        3 => P3.get_or_init(|| all_partitions(3)),
        4 => P4.get_or_init(|| all_partitions(4)),
        _ => panic!("moments of order {k} are not closed"),
    }
}

fn all_partitions(k: usize) -> Vec<Partition> {
    fn rec(i: usize, k: usize, cur: &mut Partition, out: &mut Vec<Partition>) {
        if i == k {
            out.push(cur.clone());
            return;
        }
        for b in 0..cur.len() {
            cur[b].push(i);
            rec(i + 1, k, cur, out);
            cur[b].pop();
        }
        cur.push(vec![i]);
        rec(i + 1, k, cur, out);
        cur.pop();
    }
    let mut out = Vec::new();
    rec(0, k, &mut Vec::new(), &mut out);
    out
}
