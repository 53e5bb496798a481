//! Bundled example systems.

use std::f64::consts::LN_2;

use crate::symbolic::{Alphabet, BlockCode, ChainSystem, Potential, Subshift, Weights};

/// Full shift on `{a, b, c, d}` onto the full 2-shift by `a, b -> 0`,
/// `c, d -> 1`, weights `(1, 0.5)`.
pub fn fs42() -> ChainSystem {
    let top = Subshift::full(Alphabet::new(["a", "b", "c", "d"]).unwrap());
    let bottom = Subshift::full(Alphabet::numeric(2).unwrap());
    let code = BlockCode::new(top.alphabet().clone(), bottom.alphabet().clone(), vec![0, 0, 1, 1])
        .unwrap();
    ChainSystem::new(vec![top, bottom], vec![code], Weights::parse_list("1, 0.5").unwrap()).unwrap()
}

/// Full 2-shift, single level, weight 1.
pub fn full2() -> ChainSystem {
    ChainSystem::single(Subshift::full(Alphabet::numeric(2).unwrap()), 1.0).unwrap()
}

/// Golden-mean shift, single level, weight 1.
pub fn golden_mean() -> ChainSystem {
    ChainSystem::single(Subshift::golden_mean(), 1.0).unwrap()
}

/// Golden-mean shift into the full 2-shift by the identity, weights `(1, 1)`.
pub fn golden_full() -> ChainSystem {
    let gm = Subshift::golden_mean();
    let full = Subshift::full(Alphabet::numeric(2).unwrap());
    let code = BlockCode::identity(gm.alphabet());
    ChainSystem::new(vec![gm, full], vec![code], Weights::parse_list("1, 1").unwrap()).unwrap()
}

/// Shift on `{a, b, c}` with `a -> a | b`, `b -> c`, `c -> a`, collapsed onto
/// the full 2-shift by `a -> 0`, `b, c -> 1`. Its image is the even shift,
/// so the level-2 measure is genuinely hidden.
pub fn even_chain() -> ChainSystem {
    even_chain_with_weights("1, 0.5")
}

pub fn even_chain_with_weights(weights: &str) -> ChainSystem {
    let alphabet = Alphabet::new(["a", "b", "c"]).unwrap();
    let allowed = vec![
        vec![true, true, false],
        vec![false, false, true],
        vec![true, false, false],
    ];
    let top = Subshift::new(alphabet, allowed).unwrap();
    let bottom = Subshift::full(Alphabet::numeric(2).unwrap());
    let code = BlockCode::new(top.alphabet().clone(), bottom.alphabet().clone(), vec![0, 1, 1])
        .unwrap();
    ChainSystem::new(vec![top, bottom], vec![code], Weights::parse_list(weights).unwrap()).unwrap()
}

/// `f_1 = (log 2) 1[x_0 = first symbol]`.
pub fn f1(system: &ChainSystem) -> Potential {
    let mut values = vec![0.0; system.top().size()];
    values[0] = LN_2;
    Potential::unary(system.top(), &values).unwrap()
}

/// Every bundled system with its name.
pub fn all() -> Vec<(&'static str, ChainSystem)> {
    vec![
        ("fs42", fs42()),
        ("full2", full2()),
        ("golden_mean", golden_mean()),
        ("golden_full", golden_full()),
        ("even_chain", even_chain()),
    ]
}

pub fn by_name(name: &str) -> Option<ChainSystem> {
    all().into_iter().find(|(n, _)| *n == name).map(|(_, s)| s)
}
