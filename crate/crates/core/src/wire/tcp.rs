//! TCP transport for sifting sessions.

use std::net::{TcpListener, TcpStream, ToSocketAddrs};

use super::session::{run_sift_session, Party, SessionConfig, SessionError, SessionOutcome};

/// Accepts one connection on `listener` and runs the session on it.
pub fn serve_on(
    listener: &TcpListener,
    party: Party<'_>,
    config: &SessionConfig,
) -> Result<SessionOutcome, SessionError> {
    let (stream, peer) = listener.accept()?;
    log::info!("sift session {} with {peer}", config.session_id);
    stream.set_nodelay(true)?;
    run_sift_session(party, stream, config)
}

/// Listens on `addr`, serves exactly one session, then closes.
pub fn serve(
    addr: impl ToSocketAddrs,
    party: Party<'_>,
    config: &SessionConfig,
) -> Result<SessionOutcome, SessionError> {
    let listener = TcpListener::bind(addr)?;
    log::info!("listening on {}", listener.local_addr()?);
    serve_on(&listener, party, config)
}

pub fn connect(
    addr: impl ToSocketAddrs,
    party: Party<'_>,
    config: &SessionConfig,
) -> Result<SessionOutcome, SessionError> {
    let stream = TcpStream::connect(addr)?;
    stream.set_nodelay(true)?;
    run_sift_session(party, stream, config)
}
