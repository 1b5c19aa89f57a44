// SPDX-License-Identifier: Apache-2.0

//! C ABI over `mtj-bist`.
//!
//! Handles are opaque and owned by the caller: every `*_new` must be paired
//! with the matching `*_free`. Functions return an [`MtjBistStatus`] and
//! write results through out-pointers, which are left untouched on error.
//! Bit patterns are passed as integers, most significant bit first.

#![allow(clippy::missing_safety_doc)]

use std::ffi::c_char;
use std::panic::{self, AssertUnwindSafe};
use std::slice;

use mtj_bist::bist::{self, AttackSpec, BistSetup, ClockConfig};
use mtj_bist::bits;
use mtj_bist::crc::{CrcConfig, Message};
use mtj_bist::detector;
use mtj_bist::katan::{self, Key80};
use mtj_bist::mtj::{self, MtjCell};
use mtj_bist::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MtjBistStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    WidthMismatch = 3,
    PendingTransition = 4,
    IndexOutOfRange = 5,
    BufferTooSmall = 6,
    Internal = 7,
}

impl From<Error> for MtjBistStatus {
    fn from(e: Error) -> Self {
        match e {
            Error::WidthMismatch { .. } => MtjBistStatus::WidthMismatch,
            Error::PendingTransition { .. } => MtjBistStatus::PendingTransition,
            Error::IndexOutOfRange { .. } => MtjBistStatus::IndexOutOfRange,
            Error::Io { .. } | Error::Csv { .. } => MtjBistStatus::Internal,
            _ => MtjBistStatus::InvalidArgument,
        }
    }
}

/// CRC codec configuration.
pub struct MtjBistCrc(CrcConfig);

/// Array of MTJ cells, one per message bit.
pub struct MtjBistArray(Vec<MtjCell>);

type Status = MtjBistStatus;

fn guard(f: impl FnOnce() -> Result<(), Status>) -> Status {
    match panic::catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => Status::Ok,
        Ok(Err(s)) => s,
        Err(_) => Status::Internal,
    }
}

unsafe fn deref<'a, T>(p: *const T) -> Result<&'a T, Status> {
    p.as_ref().ok_or(Status::NullPointer)
}

unsafe fn deref_mut<'a, T>(p: *mut T) -> Result<&'a mut T, Status> {
    p.as_mut().ok_or(Status::NullPointer)
}

fn check_width(value: u64, width: usize) -> Result<(), Status> {
    if width < 64 && value >> width != 0 {
        return Err(Status::WidthMismatch);
    }
    Ok(())
}

/// Static description of a status code. Never null.
#[no_mangle]
pub extern "C" fn mtj_bist_status_message(status: MtjBistStatus) -> *const c_char {
    let s: &'static [u8] = match status {
        Status::Ok => b"ok\0",
        Status::NullPointer => b"null pointer argument\0",
        Status::InvalidArgument => b"invalid argument\0",
        Status::WidthMismatch => b"value does not fit the configured width\0",
        Status::PendingTransition => b"write scheduled while a cell is still switching\0",
        Status::IndexOutOfRange => b"cell index out of range\0",
        Status::BufferTooSmall => b"output buffer too small\0",
        Status::Internal => b"internal error\0",
    };
    s.as_ptr().cast()
}

/// CRC with generator `poly` (coefficients below the leading term) of degree
/// `width` over `data_width`-bit patterns.
#[no_mangle]
pub unsafe extern "C" fn mtj_bist_crc_new(
    poly: u64,
    width: usize,
    data_width: usize,
    out: *mut *mut MtjBistCrc,
) -> MtjBistStatus {
    guard(|| {
        let out = deref_mut(out)?;
        let crc = CrcConfig::new(poly, width, data_width)?;
        *out = Box::into_raw(Box::new(MtjBistCrc(crc)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn mtj_bist_crc_free(crc: *mut MtjBistCrc) {
    if !crc.is_null() {
        drop(Box::from_raw(crc));
    }
}

/// Data plus check bits; the array size a BIST round expects.
#[no_mangle]
pub unsafe extern "C" fn mtj_bist_crc_message_width(
    crc: *const MtjBistCrc,
    out: *mut usize,
) -> MtjBistStatus {
    guard(|| {
        *deref_mut(out)? = deref(crc)?.0.message_width();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn mtj_bist_crc_encode(
    crc: *const MtjBistCrc,
    data: u64,
    out_check: *mut u64,
) -> MtjBistStatus {
    guard(|| {
        let crc = &deref(crc)?.0;
        let out = deref_mut(out_check)?;
        check_width(data, crc.data_width())?;
        let msg = crc.encode(&bits::from_u64(data, crc.data_width()))?;
        *out = bits::to_u64(msg.check());
        Ok(())
    })
}

/// Writes the decoder error flag: `true` when `data`/`check` is not a
/// codeword.
#[no_mangle]
pub unsafe extern "C" fn mtj_bist_crc_verify(
    crc: *const MtjBistCrc,
    data: u64,
    check: u64,
    out_error: *mut bool,
) -> MtjBistStatus {
    guard(|| {
        let crc = &deref(crc)?.0;
        let out = deref_mut(out_error)?;
        check_width(data, crc.data_width())?;
        check_width(check, crc.width())?;
        let msg = Message::new(
            bits::from_u64(data, crc.data_width()),
            bits::from_u64(check, crc.width()),
            crc,
        )?;
        *out = crc.verify(&msg);
        Ok(())
    })
}

/// `len` nominal cells holding logic 0.
#[no_mangle]
pub unsafe extern "C" fn mtj_bist_array_new(
    len: usize,
    out: *mut *mut MtjBistArray,
) -> MtjBistStatus {
    guard(|| {
        let out = deref_mut(out)?;
        if len == 0 {
            return Err(Status::InvalidArgument);
        }
        *out = Box::into_raw(Box::new(MtjBistArray(mtj::nominal_array(len))));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn mtj_bist_array_free(array: *mut MtjBistArray) {
    if !array.is_null() {
        drop(Box::from_raw(array));
    }
}

#[no_mangle]
pub unsafe extern "C" fn mtj_bist_array_len(
    array: *const MtjBistArray,
    out: *mut usize,
) -> MtjBistStatus {
    guard(|| {
        *deref_mut(out)? = deref(array)?.0.len();
        Ok(())
    })
}

/// Scales the free-layer thickness of cell `index` by `multiplier`.
#[no_mangle]
pub unsafe extern "C" fn mtj_bist_array_inject(
    array: *mut MtjBistArray,
    index: usize,
    multiplier: f64,
) -> MtjBistStatus {
    guard(|| {
        let cells = &mut deref_mut(array)?.0;
        bist::inject_attack(cells, &AttackSpec::single(index, multiplier))?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn mtj_bist_array_thickness(
    array: *const MtjBistArray,
    index: usize,
    out: *mut f64,
) -> MtjBistStatus {
    guard(|| {
        let cells = &deref(array)?.0;
        let out = deref_mut(out)?;
        let cell = cells.get(index).ok_or(Status::IndexOutOfRange)?;
        *out = cell.tm_actual;
        Ok(())
    })
}

/// One BIST round of `pattern` at half period `half_period_ns` with the
/// default delay model. The array itself is not modified. Faulted cell
/// indices go to `faulted` (capacity `faulted_cap`, may be null when zero);
/// their count always goes to `out_n_faulted`.
#[no_mangle]
pub unsafe extern "C" fn mtj_bist_run(
    array: *const MtjBistArray,
    crc: *const MtjBistCrc,
    half_period_ns: f64,
    pattern: u64,
    out_error: *mut bool,
    faulted: *mut usize,
    faulted_cap: usize,
    out_n_faulted: *mut usize,
) -> MtjBistStatus {
    guard(|| {
        let cells = &deref(array)?.0;
        let crc = &deref(crc)?.0;
        let out_error = deref_mut(out_error)?;
        let out_n = deref_mut(out_n_faulted)?;
        if faulted.is_null() && faulted_cap > 0 {
            return Err(Status::NullPointer);
        }
        check_width(pattern, crc.data_width())?;
        let setup = BistSetup {
            clock: ClockConfig::default().with_half_period(half_period_ns),
            crc: crc.clone(),
            ..Default::default()
        };
        let r = bist::run_bist(&bits::from_u64(pattern, crc.data_width()), cells, &setup)?;
        *out_error = r.error_flag;
        *out_n = r.faulted_positions.len();
        if r.faulted_positions.len() > faulted_cap {
            return Err(Status::BufferTooSmall);
        }
        if faulted_cap > 0 {
            slice::from_raw_parts_mut(faulted, faulted_cap)[..r.faulted_positions.len()]
                .copy_from_slice(&r.faulted_positions);
        }
        Ok(())
    })
}

fn key(lo: u64, hi: u16) -> Key80 {
    Key80::truncating((u128::from(hi) << 64) | u128::from(lo))
}

/// KATAN-32 with the 80-bit key split as `key_hi:key_lo` (16 + 64 bits).
#[no_mangle]
pub unsafe extern "C" fn mtj_bist_katan_encrypt(
    plaintext: u32,
    key_lo: u64,
    key_hi: u16,
    out: *mut u32,
) -> MtjBistStatus {
    guard(|| {
        *deref_mut(out)? = katan::encrypt32(plaintext, key(key_lo, key_hi));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn mtj_bist_katan_decrypt(
    ciphertext: u32,
    key_lo: u64,
    key_hi: u16,
    out: *mut u32,
) -> MtjBistStatus {
    guard(|| {
        *deref_mut(out)? = katan::decrypt32(ciphertext, key(key_lo, key_hi));
        Ok(())
    })
}

/// Peak absolute cross-correlation of two traces of `len` samples.
#[no_mangle]
pub unsafe extern "C" fn mtj_bist_relational_detector(
    a: *const f64,
    b: *const f64,
    len: usize,
    out: *mut f64,
) -> MtjBistStatus {
    guard(|| {
        if a.is_null() || b.is_null() {
            return Err(Status::NullPointer);
        }
        let out = deref_mut(out)?;
        if len == 0 {
            return Err(Status::InvalidArgument);
        }
        let (a, b) = (slice::from_raw_parts(a, len), slice::from_raw_parts(b, len));
        *out = detector::relational_detector(a, b)?;
        Ok(())
    })
}
