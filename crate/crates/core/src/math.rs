// Copyright 2026 the Frontier Authors
// SPDX-License-Identifier: Apache-2.0

//! Float functions for `no_std` builds, backed by `libm`.

#![allow(dead_code)]

macro_rules! define_float_funcs {
    ($(fn $name:ident(self $(,$arg:ident: $arg_ty:ty)*) -> $ret:ty => $lname:ident;)+) => {
        #[cfg(not(feature = "std"))]
        pub(crate) trait FloatFuncs: Sized {
            $(fn $name(self $(,$arg: $arg_ty)*) -> $ret;)+
        }

        #[cfg(not(feature = "std"))]
        impl FloatFuncs for f64 {
            $(#[inline]
            fn $name(self $(,$arg: $arg_ty)*) -> $ret {
                #[cfg(feature = "libm")]
                return libm::$lname(self $(,$arg as _)*);

                #[cfg(not(feature = "libm"))]
                compile_error!("frontier-core requires either the `std` or `libm` feature")
            })+
        }
    }
}

define_float_funcs! {
    fn abs(self) -> f64 => fabs;
    fn acos(self) -> f64 => acos;
    fn atan2(self, other: f64) -> f64 => atan2;
    fn cbrt(self) -> f64 => cbrt;
    fn cos(self) -> f64 => cos;
    fn floor(self) -> f64 => floor;
    fn hypot(self, other: f64) -> f64 => hypot;
    fn powi(self, n: i32) -> f64 => pow;
    fn round(self) -> f64 => round;
    fn sin(self) -> f64 => sin;
    fn sqrt(self) -> f64 => sqrt;
}

/// Euclidean remainder, `self - period * floor(self / period)`.
#[inline]
pub(crate) fn wrap(value: f64, start: f64, period: f64) -> f64 {
    #[cfg(not(feature = "std"))]
    use FloatFuncs as _;
    let shifted = value - start;
    let r = shifted - period * (shifted / period).floor();
    // floor can round r up to exactly `period`
    if r >= period {
        start
    } else {
        start + r
    }
}

/// Binomial coefficient as a float, exact for the small orders used here.
pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}
