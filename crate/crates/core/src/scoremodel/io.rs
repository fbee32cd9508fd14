//! Params file: `b"DPPM"`, format version `u32`, the architecture
//! (`input_dim`, `output_dim`, activation code, hidden-layer count, each hidden
//! width, all `u32`; then the init seed as `u64`), followed by every layer's
//! weight matrix (row-major) and bias as little-endian `f32`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::mlp::{Activation, MlpSpec, Params};
use crate::harness::tensor_io::{
    read_f32s, read_magic, read_u32, read_u64, write_f32s, write_u32, write_u64, MAGIC,
};
use crate::{Error, Result};

pub const PARAMS_FORMAT_VERSION: u32 = 1;

fn activation_code(a: Activation) -> u32 {
    match a {
        Activation::Tanh => 0,
        Activation::Softplus => 1,
    }
}

pub fn write_params_to(w: &mut impl Write, params: &Params) -> Result<()> {
    let spec = params.spec();
    w.write_all(MAGIC)?;
    write_u32(w, PARAMS_FORMAT_VERSION)?;
    write_u32(w, spec.input_dim as u32)?;
    write_u32(w, spec.output_dim as u32)?;
    write_u32(w, activation_code(spec.activation))?;
    write_u32(w, spec.hidden_dims.len() as u32)?;
    for &h in &spec.hidden_dims {
        write_u32(w, h as u32)?;
    }
    write_u64(w, spec.seed)?;
    write_f32s(w, params.flat().iter().copied())
}

pub fn read_params_from(r: &mut impl Read) -> Result<Params> {
    read_magic(r)?;
    let version = read_u32(r)?;
    if version != PARAMS_FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported params version {version}")));
    }
    let input_dim = read_u32(r)? as usize;
    let output_dim = read_u32(r)? as usize;
    let activation = match read_u32(r)? {
        0 => Activation::Tanh,
        1 => Activation::Softplus,
        other => return Err(Error::Format(format!("unknown activation code {other}"))),
    };
    let n_hidden = read_u32(r)? as usize;
    if n_hidden > 64 {
        return Err(Error::Format(format!("implausible layer count {n_hidden}")));
    }
    let hidden_dims = (0..n_hidden)
        .map(|_| read_u32(r).map(|h| h as usize))
        .collect::<Result<Vec<_>>>()?;
    let seed = read_u64(r)?;
    let spec = MlpSpec {
        input_dim,
        hidden_dims,
        activation,
        output_dim,
        seed,
    };
    spec.validate().map_err(|e| Error::Format(e.to_string()))?;
    let flat = read_f32s(r, spec.param_count())?;
    Params::from_flat(spec, flat)
}

pub fn save_params(path: &Path, params: &Params) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_params_to(&mut w, params)?;
    w.flush()?;
    Ok(())
}

pub fn load_params(path: &Path) -> Result<Params> {
    read_params_from(&mut BufReader::new(File::open(path)?))
}
