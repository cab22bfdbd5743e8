use std::net::SocketAddr;
use std::sync::Arc;
use std::thread::{self, JoinHandle};

use simlive_core::control::{ControlSurface, LiveSim, PublishStats};
use simlive_core::des::{Kernel, StopSignal};
use simlive_core::endpoint::{EndpointError, Router, Server};
use simlive_core::netsim::{SimError, Simulation};

use crate::config::InstanceConfig;

pub const EXIT_BIND: i32 = 3;

/// A simulation instance serving its endpoint.
#[derive(Debug)]
pub struct Instance {
    server: Option<Server>,
    stop: StopSignal,
    sim_thread: Option<JoinHandle<Result<(), SimError>>>,
    published: Arc<PublishStats>,
}

impl Instance {
    /// Binds the endpoint, then starts the simulation thread paced at `config.pace`.
    pub fn start(config: &InstanceConfig, sim: Simulation) -> Result<Self, EndpointError> {
        let router = Arc::new(Router::new());
        let live = LiveSim::new(sim, router.clone(), config.label());
        let published = live.published();
        let mut kernel = Kernel::new(live);
        ControlSurface::bind(&router, kernel.injector()).expect("fresh router has no procedures");
        let server = Server::bind(&config.host, config.port, router)?;
        let stop = StopSignal::new();
        let pace = config.pace;
        let s = stop.clone();
        let sim_thread = thread::Builder::new()
            .name("simulation".into())
            .spawn(move || kernel.run_paced(pace, &s))
            .expect("spawn simulation thread");
        log::info!("{} listening on {}", config.label(), server.url());
        Ok(Instance {
            server: Some(server),
            stop,
            sim_thread: Some(sim_thread),
            published,
        })
    }

    fn server(&self) -> &Server {
        self.server.as_ref().expect("instance is running")
    }

    pub fn url(&self) -> String {
        self.server().url()
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.server().local_addr()
    }

    pub fn router(&self) -> &Arc<Router> {
        self.server().router()
    }

    pub fn published(&self) -> &PublishStats {
        &self.published
    }

    /// Whether the simulation thread has died.
    pub fn is_finished(&self) -> bool {
        self.sim_thread.as_ref().is_none_or(JoinHandle::is_finished)
    }

    /// Stops the simulation, says GOODBYE to every session and frees the port.
    pub fn shutdown(&mut self) -> Result<(), SimError> {
        self.stop.stop();
        let result = match self.sim_thread.take().map(JoinHandle::join) {
            Some(Ok(r)) => r,
            Some(Err(panic)) => std::panic::resume_unwind(panic),
            None => Ok(()),
        };
        if let Some(server) = self.server.take() {
            server.shutdown();
        }
        result
    }
}

impl Drop for Instance {
    fn drop(&mut self) {
        self.stop.stop();
    }
}
