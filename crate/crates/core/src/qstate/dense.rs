//! Dense statevector used only as a reference oracle for small systems.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::Rng;

use super::branch::{sample, Branch, Measurement};
use super::layout::{RegisterLayout, RESULT_QUBIT};
use super::{Gate, PmOutcome};
use crate::bits::BitString;
use crate::error::{Error, Result};

pub const MAX_DENSE_QUBITS: usize = 14;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseState {
    layout: RegisterLayout,
    amplitudes: Vec<Complex64>,
}

impl DenseState {
    pub fn zero(layout: RegisterLayout) -> Result<Self> {
        let q = layout.total_qubits();
        if q > MAX_DENSE_QUBITS {
            return Err(Error::TooLargeForDense { max: MAX_DENSE_QUBITS, got: q });
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << q];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(Self { layout, amplitudes })
    }

    pub(crate) fn from_branches(layout: RegisterLayout, branches: &[Branch]) -> Result<Self> {
        let mut s = Self::zero(layout)?;
        s.amplitudes[0] = Complex64::new(0.0, 0.0);
        for b in branches {
            s.amplitudes[b.bits as usize] += b.amplitude;
        }
        Ok(s)
    }

    /// `|+>|data>|0...0>` built gate by gate (X on set data bits, then H on the result).
    pub fn plus(layout: RegisterLayout, data: &BitString) -> Result<Self> {
        if data.len() != layout.data_qubits() {
            return Err(Error::BitLength { expected: layout.data_qubits(), got: data.len() });
        }
        let mut s = Self::zero(layout)?;
        for i in 0..data.len() {
            if data.get(i) {
                s.x(i + 1)?;
            }
        }
        s.h(RESULT_QUBIT)?;
        Ok(s)
    }

    pub fn layout(&self) -> RegisterLayout {
        self.layout
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn nonzero_count(&self, tol: f64) -> usize {
        self.amplitudes.iter().filter(|a| a.norm() > tol).count()
    }

    pub fn x(&mut self, q: usize) -> Result<()> {
        self.layout.check_qubit(q)?;
        let bit = 1usize << q;
        for i in 0..self.amplitudes.len() {
            if i & bit == 0 {
                self.amplitudes.swap(i, i | bit);
            }
        }
        Ok(())
    }

    pub fn h(&mut self, q: usize) -> Result<()> {
        self.layout.check_qubit(q)?;
        let bit = 1usize << q;
        for i in 0..self.amplitudes.len() {
            if i & bit == 0 {
                let (a, b) = (self.amplitudes[i], self.amplitudes[i | bit]);
                self.amplitudes[i] = (a + b) * FRAC_1_SQRT_2;
                self.amplitudes[i | bit] = (a - b) * FRAC_1_SQRT_2;
            }
        }
        Ok(())
    }

    pub fn apply_gate(&mut self, gate: Gate) -> Result<()> {
        match gate {
            Gate::Cnot { control, target } => {
                self.layout.check_qubit(control)?;
                self.layout.check_qubit(target)?;
                let (c, t) = (1usize << control, 1usize << target);
                for i in 0..self.amplitudes.len() {
                    if i & c != 0 && i & t == 0 {
                        self.amplitudes.swap(i, i | t);
                    }
                }
            }
            Gate::Z { qubit } => {
                self.layout.check_qubit(qubit)?;
                let bit = 1usize << qubit;
                for (i, a) in self.amplitudes.iter_mut().enumerate() {
                    if i & bit != 0 {
                        *a = -*a;
                    }
                }
            }
            Gate::Swap { a, b } => {
                self.layout.check_qubit(a)?;
                self.layout.check_qubit(b)?;
                let (ba, bb) = (1usize << a, 1usize << b);
                for i in 0..self.amplitudes.len() {
                    if i & ba != 0 && i & bb == 0 {
                        self.amplitudes.swap(i, (i ^ ba) | bb);
                    }
                }
            }
        }
        Ok(())
    }

    /// Controlled-Z from the result qubit onto an oracle bit `f(data)`.
    pub fn apply_uf<F>(&mut self, f: F)
    where
        F: Fn(&BitString) -> bool,
    {
        let nk = self.layout.data_qubits();
        for (i, a) in self.amplitudes.iter_mut().enumerate() {
            if i & 1 == 1 && f(&BitString::from_word(nk, (i as u128) >> 1)) {
                *a = -*a;
            }
        }
    }

    pub fn outcome_distribution(&self, qubits: &[usize]) -> Result<Vec<(BitString, f64)>> {
        for &q in qubits {
            self.layout.check_qubit(q)?;
        }
        let mut acc: BTreeMap<BitString, f64> = BTreeMap::new();
        for (i, a) in self.amplitudes.iter().enumerate() {
            let p = a.norm_sqr();
            if p == 0.0 {
                continue;
            }
            let mut o = BitString::zeros(qubits.len());
            for (j, &q) in qubits.iter().enumerate() {
                o.set(j, (i >> q) & 1 == 1);
            }
            *acc.entry(o).or_default() += p;
        }
        Ok(acc.into_iter().filter(|&(_, p)| p > 1e-14).collect())
    }

    pub fn project(&mut self, qubits: &[usize], outcome: &BitString) -> Result<f64> {
        let mut mask = 0usize;
        let mut want = 0usize;
        for (j, &q) in qubits.iter().enumerate() {
            self.layout.check_qubit(q)?;
            mask |= 1 << q;
            if outcome.get(j) {
                want |= 1 << q;
            }
        }
        let mut p = 0.0;
        for (i, a) in self.amplitudes.iter_mut().enumerate() {
            if i & mask != want {
                *a = Complex64::new(0.0, 0.0);
            } else {
                p += a.norm_sqr();
            }
        }
        if p <= 1e-14 {
            return Err(Error::Param("projection onto a zero-probability outcome".into()));
        }
        let scale = 1.0 / p.sqrt();
        self.amplitudes.iter_mut().for_each(|a| *a *= scale);
        Ok(p)
    }

    pub fn measure<R: Rng + ?Sized>(&mut self, qubits: &[usize], rng: &mut R) -> Result<Measurement> {
        if qubits.is_empty() {
            return Err(Error::Empty("measured qubit set"));
        }
        let dist = self.outcome_distribution(qubits)?;
        let outcome = sample(&dist, rng);
        let probability = self.project(qubits, &outcome)?;
        Ok(Measurement { outcome, probability })
    }

    pub fn pm_probabilities(&self) -> (f64, f64) {
        let mut rotated = self.clone();
        rotated.h(RESULT_QUBIT).expect("result qubit exists");
        let p_minus: f64 = rotated
            .amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| i & 1 == 1)
            .map(|(_, a)| a.norm_sqr())
            .sum();
        (1.0 - p_minus, p_minus)
    }

    /// Rotates into the `±` basis, projects, rotates back.
    pub fn project_pm(&mut self, outcome: PmOutcome) -> Result<f64> {
        self.h(RESULT_QUBIT)?;
        let bit = BitString::from_bools(&[outcome == PmOutcome::Minus]);
        let p = self.project(&[RESULT_QUBIT], &bit)?;
        self.h(RESULT_QUBIT)?;
        Ok(p)
    }

    pub fn measure_result_pm<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<(PmOutcome, f64)> {
        let (plus, _) = self.pm_probabilities();
        let outcome = if rng.random::<f64>() < plus { PmOutcome::Plus } else { PmOutcome::Minus };
        let p = self.project_pm(outcome)?;
        Ok((outcome, p))
    }
}
