use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};

use storehouse_core::WarehouseConfig;

use crate::session::Session;

/// A listener running on a background thread.
#[derive(Debug)]
pub struct Server {
    addr: SocketAddr,
    handle: JoinHandle<io::Result<()>>,
}

impl Server {
    /// Binds `addr` (port 0 picks a free port) and starts accepting.
    pub fn spawn(addr: impl ToSocketAddrs, config: Arc<WarehouseConfig>) -> io::Result<Server> {
        let listener = TcpListener::bind(addr)?;
        let addr = listener.local_addr()?;
        let handle = thread::spawn(move || serve(listener, config));
        Ok(Server { addr, handle })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn is_running(&self) -> bool {
        !self.handle.is_finished()
    }
}

/// Accepts connections forever, one thread and one session per connection.
pub fn serve(listener: TcpListener, config: Arc<WarehouseConfig>) -> io::Result<()> {
    let ids = AtomicU64::new(0);
    for stream in listener.incoming() {
        let stream = match stream {
            Ok(s) => s,
            Err(_) => continue,
        };
        let session = Session::new(ids.fetch_add(1, Ordering::Relaxed), Arc::clone(&config));
        thread::spawn(move || {
            // A transport failure just drops the session.
            let _ = run_session(stream, session);
        });
    }
    Ok(())
}

fn run_session(stream: TcpStream, mut session: Session) -> io::Result<()> {
    stream.set_nodelay(true)?;
    let reader = BufReader::new(stream.try_clone()?);
    let mut writer = BufWriter::new(stream);
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let reply = session.handle_line(&line);
        writer.write_all(reply.line.as_bytes())?;
        writer.write_all(b"\n")?;
        writer.flush()?;
        if reply.close {
            break;
        }
    }
    Ok(())
}
