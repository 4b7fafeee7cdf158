use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::net::{TcpStream, ToSocketAddrs};

use serde::de::DeserializeOwned;
use thiserror::Error;

use crate::protocol::{ActionRef, ErrorBody, ErrorResponse, Request, SpecResponse, StepResponse};

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("transport: {0}")]
    Io(#[from] io::Error),
    #[error("undecodable response: {0}")]
    Decode(#[from] serde_json::Error),
    #[error("server error {:?}: {}", .0.code, .0.message)]
    Server(ErrorBody),
    #[error("server closed the connection")]
    Closed,
}

/// Blocking protocol client.
#[derive(Debug)]
pub struct Client {
    reader: BufReader<TcpStream>,
    writer: BufWriter<TcpStream>,
}

impl Client {
    pub fn connect(addr: impl ToSocketAddrs) -> Result<Self, ClientError> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        Ok(Client {
            reader: BufReader::new(stream.try_clone()?),
            writer: BufWriter::new(stream),
        })
    }

    /// Sends one raw line and returns the raw response line.
    pub fn raw(&mut self, line: &str) -> Result<String, ClientError> {
        self.writer.write_all(line.as_bytes())?;
        self.writer.write_all(b"\n")?;
        self.writer.flush()?;
        let mut response = String::new();
        if self.reader.read_line(&mut response)? == 0 {
            return Err(ClientError::Closed);
        }
        Ok(response.trim_end().to_string())
    }

    fn call<T: DeserializeOwned>(&mut self, req: &Request) -> Result<T, ClientError> {
        let line = self.raw(&serde_json::to_string(req)?)?;
        if let Ok(err) = serde_json::from_str::<ErrorResponse>(&line) {
            return Err(ClientError::Server(err.error));
        }
        Ok(serde_json::from_str(&line)?)
    }

    pub fn spec(&mut self) -> Result<SpecResponse, ClientError> {
        self.call(&Request::Spec)
    }

    pub fn reset(&mut self, seed: Option<u64>) -> Result<StepResponse, ClientError> {
        self.call(&Request::Reset { seed })
    }

    pub fn step(&mut self, row: usize, col: usize) -> Result<StepResponse, ClientError> {
        self.call(&Request::Step {
            action: ActionRef::Cell(storehouse_core::Coord::new(row, col)),
        })
    }

    pub fn close(mut self) -> Result<(), ClientError> {
        self.raw(&serde_json::to_string(&Request::Close)?)?;
        Ok(())
    }
}
