//! Binary checkpoint: `OPCH` magic, format version, hyperparameters as
//! JSON, then each head's temperature and network parameters. The replay
//! buffer and optimizer moments are not saved.

use std::io::{self, Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use thiserror::Error;

use super::learner::{Head, HyperParams, Learner};
use super::nn::Mlp;
use crate::grounding::{OperatorId, K};

pub const MAGIC: &[u8; 4] = b"OPCH";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("not a checkpoint (bad magic)")]
    BadMagic,
    #[error("checkpoint format version {found}, expected {expected}")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn write_net(w: &mut impl Write, net: &Mlp) -> io::Result<()> {
    w.write_u32::<LittleEndian>(net.sizes().len() as u32)?;
    for &s in net.sizes() {
        w.write_u32::<LittleEndian>(s as u32)?;
    }
    w.write_u64::<LittleEndian>(net.params.len() as u64)?;
    for &p in &net.params {
        w.write_f64::<LittleEndian>(p)?;
    }
    Ok(())
}

fn read_net(r: &mut impl Read) -> Result<Mlp, CheckpointError> {
    let layers = r.read_u32::<LittleEndian>()? as usize;
    if !(2..=16).contains(&layers) {
        return Err(CheckpointError::Corrupt(format!("{layers} layer sizes")));
    }
    let sizes = (0..layers)
        .map(|_| r.read_u32::<LittleEndian>().map(|s| s as usize))
        .collect::<io::Result<Vec<_>>>()?;
    let len = r.read_u64::<LittleEndian>()? as usize;
    let expected: usize = sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
    if len != expected {
        return Err(CheckpointError::Corrupt(format!("{len} parameters for sizes {sizes:?}")));
    }
    let mut params = vec![0.0; len];
    r.read_f64_into::<LittleEndian>(&mut params)?;
    Mlp::from_params(&sizes, params).ok_or_else(|| CheckpointError::Corrupt("bad network shape".into()))
}

pub fn save(learner: &Learner, w: &mut impl Write) -> Result<(), CheckpointError> {
    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(VERSION)?;
    let hp = serde_json::to_vec(&learner.hp).map_err(|e| CheckpointError::Corrupt(e.to_string()))?;
    w.write_u32::<LittleEndian>(hp.len() as u32)?;
    w.write_all(&hp)?;
    w.write_u32::<LittleEndian>(learner.heads.len() as u32)?;
    for h in &learner.heads {
        w.write_u8(h.op.index() as u8)?;
        w.write_f64::<LittleEndian>(h.log_alpha)?;
        write_net(w, &h.actor)?;
        for net in h.critics.iter().chain(&h.targets) {
            write_net(w, net)?;
        }
    }
    Ok(())
}

pub fn load(r: &mut impl Read) -> Result<Learner, CheckpointError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|_| CheckpointError::BadMagic)?;
    if &magic != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let found = r.read_u32::<LittleEndian>()?;
    if found != VERSION {
        return Err(CheckpointError::VersionMismatch { found, expected: VERSION });
    }
    let len = r.read_u32::<LittleEndian>()? as usize;
    if len > 1 << 20 {
        return Err(CheckpointError::Corrupt("oversized header".into()));
    }
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    let hp: HyperParams = serde_json::from_slice(&buf).map_err(|e| CheckpointError::Corrupt(e.to_string()))?;
    let count = r.read_u32::<LittleEndian>()? as usize;
    if count != K {
        return Err(CheckpointError::Corrupt(format!("{count} heads")));
    }
    let mut heads = Vec::with_capacity(K);
    for expected in OperatorId::ALL {
        let idx = r.read_u8()? as usize;
        if idx != expected.index() {
            return Err(CheckpointError::Corrupt(format!("head {idx} out of order")));
        }
        let log_alpha = r.read_f64::<LittleEndian>()?;
        let actor = read_net(r)?;
        let q = [read_net(r)?, read_net(r)?];
        let t = [read_net(r)?, read_net(r)?];
        heads.push(Head::from_parts(expected, &hp, actor, q, t, log_alpha));
    }
    Ok(Learner { hp, heads })
}

pub fn save_path(learner: &Learner, path: &std::path::Path) -> Result<(), CheckpointError> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = io::BufWriter::new(std::fs::File::create(&tmp)?);
        save(learner, &mut f)?;
        f.flush()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_path(path: &std::path::Path) -> Result<Learner, CheckpointError> {
    load(&mut io::BufReader::new(std::fs::File::open(path)?))
}
