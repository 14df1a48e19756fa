//! Output backends with one write contract: every accepted byte is counted,
//! whether it lands in a file, in memory, or nowhere.

use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{self, BufWriter, Stdout, Write};
use std::path::{Path, PathBuf};

use memmap2::MmapMut;

pub const FILE_BUFFER: usize = 1 << 20;
pub const DEFAULT_MMAP_RESERVE: u64 = 1 << 30;

/// Where output goes, as written on the command line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SinkSpec {
    /// `FILE`: buffered file.
    File(PathBuf),
    /// `-`
    Stdout,
    /// `null:` (or `null`)
    Null,
    /// `mem:`
    Memory,
    /// `mmap:FILE`
    Mmap(PathBuf),
}

impl SinkSpec {
    pub fn parse(s: &str) -> SinkSpec {
        match s {
            "-" => SinkSpec::Stdout,
            "null:" | "null" => SinkSpec::Null,
            "mem:" => SinkSpec::Memory,
            _ => match s.strip_prefix("mmap:") {
                Some(path) => SinkSpec::Mmap(PathBuf::from(path)),
                None => SinkSpec::File(PathBuf::from(s)),
            },
        }
    }
}

impl fmt::Display for SinkSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SinkSpec::File(p) => write!(f, "{}", p.display()),
            SinkSpec::Stdout => f.write_str("-"),
            SinkSpec::Null => f.write_str("null:"),
            SinkSpec::Memory => f.write_str("mem:"),
            SinkSpec::Mmap(p) => write!(f, "mmap:{}", p.display()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FinalStats {
    pub bytes: u64,
}

/// A file mapped at a large sparse size, truncated to the written length on
/// finish.
pub struct MmapWriter {
    file: File,
    map: Option<MmapMut>,
    capacity: u64,
    pos: usize,
}

impl MmapWriter {
    pub fn create(path: &Path, reserve: u64) -> io::Result<MmapWriter> {
        let file = OpenOptions::new().read(true).write(true).create(true).truncate(true).open(path)?;
        file.set_len(reserve)?;
        // SAFETY: the file was just created and truncated by us; nothing else
        // is expected to resize it while the mapping lives.
        let map = unsafe { MmapMut::map_mut(&file)? };
        Ok(MmapWriter { file, map: Some(map), capacity: reserve, pos: 0 })
    }

    fn grow(&mut self, needed: u64) -> io::Result<()> {
        let mut capacity = self.capacity.max(1);
        while capacity < needed {
            capacity *= 2;
        }
        if let Some(map) = self.map.take() {
            map.flush()?;
        }
        self.file.set_len(capacity)?;
        // SAFETY: as in `create`.
        self.map = Some(unsafe { MmapMut::map_mut(&self.file)? });
        self.capacity = capacity;
        Ok(())
    }

    fn write(&mut self, data: &[u8]) -> io::Result<()> {
        let end = self.pos + data.len();
        if end as u64 > self.capacity {
            self.grow(end as u64)?;
        }
        let map = self.map.as_mut().expect("mapping present while open");
        map[self.pos..end].copy_from_slice(data);
        self.pos = end;
        Ok(())
    }

    fn finish(&mut self) -> io::Result<()> {
        if let Some(map) = self.map.take() {
            map.flush()?;
        }
        self.file.set_len(self.pos as u64)
    }
}

enum Backend {
    File(BufWriter<File>),
    Stdout(BufWriter<Stdout>),
    Memory(Vec<u8>),
    Null,
    Mmap(MmapWriter),
}

/// An output backend plus its byte count.
pub struct Sink {
    backend: Backend,
    bytes_written: u64,
    finished: Option<FinalStats>,
}

impl fmt::Debug for Sink {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.backend {
            Backend::File(_) => "file",
            Backend::Stdout(_) => "stdout",
            Backend::Memory(_) => "memory",
            Backend::Null => "null",
            Backend::Mmap(_) => "mmap",
        };
        f.debug_struct("Sink")
            .field("backend", &kind)
            .field("bytes_written", &self.bytes_written)
            .finish()
    }
}

impl Sink {
    fn with(backend: Backend) -> Sink {
        Sink { backend, bytes_written: 0, finished: None }
    }

    pub fn memory() -> Sink {
        Sink::with(Backend::Memory(Vec::new()))
    }

    pub fn null() -> Sink {
        Sink::with(Backend::Null)
    }

    pub fn stdout() -> Sink {
        Sink::with(Backend::Stdout(BufWriter::with_capacity(FILE_BUFFER, io::stdout())))
    }

    pub fn file(path: &Path) -> io::Result<Sink> {
        let f = File::create(path)?;
        Ok(Sink::with(Backend::File(BufWriter::with_capacity(FILE_BUFFER, f))))
    }

    pub fn mmap(path: &Path, reserve: u64) -> io::Result<Sink> {
        Ok(Sink::with(Backend::Mmap(MmapWriter::create(path, reserve)?)))
    }

    /// Opens the backend named by `spec`. A memory map that cannot be set up
    /// falls back to a buffered file with a warning on standard error.
    pub fn open(spec: &SinkSpec) -> io::Result<Sink> {
        match spec {
            SinkSpec::File(p) => Sink::file(p),
            SinkSpec::Stdout => Ok(Sink::stdout()),
            SinkSpec::Null => Ok(Sink::null()),
            SinkSpec::Memory => Ok(Sink::memory()),
            SinkSpec::Mmap(p) => Sink::mmap(p, DEFAULT_MMAP_RESERVE).or_else(|e| {
                eprintln!("warning: memory-mapped output unavailable ({e}); using buffered file");
                Sink::file(p)
            }),
        }
    }

    #[inline]
    pub fn write(&mut self, data: &[u8]) -> io::Result<()> {
        if self.finished.is_some() {
            return Err(io::Error::other("write to a finished sink"));
        }
        match &mut self.backend {
            Backend::File(w) => w.write_all(data)?,
            Backend::Stdout(w) => w.write_all(data)?,
            Backend::Memory(buf) => buf.extend_from_slice(data),
            Backend::Null => {
                std::hint::black_box(data);
            }
            Backend::Mmap(m) => m.write(data)?,
        }
        self.bytes_written += data.len() as u64;
        Ok(())
    }

    pub fn bytes_written(&self) -> u64 {
        self.bytes_written
    }

    /// Flushes and closes. Calling it again returns the same stats.
    pub fn finish(&mut self) -> io::Result<FinalStats> {
        if let Some(stats) = self.finished {
            return Ok(stats);
        }
        match &mut self.backend {
            Backend::File(w) => w.flush()?,
            Backend::Stdout(w) => w.flush()?,
            Backend::Memory(_) | Backend::Null => {}
            Backend::Mmap(m) => m.finish()?,
        }
        let stats = FinalStats { bytes: self.bytes_written };
        self.finished = Some(stats);
        Ok(stats)
    }

    /// Contents of a memory sink.
    pub fn contents(&self) -> Option<&[u8]> {
        match &self.backend {
            Backend::Memory(buf) => Some(buf),
            _ => None,
        }
    }

    pub fn into_contents(self) -> Option<Vec<u8>> {
        match self.backend {
            Backend::Memory(buf) => Some(buf),
            _ => None,
        }
    }
}
