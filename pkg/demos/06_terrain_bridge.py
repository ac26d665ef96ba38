"""Terrain over the wire.

Starts the TCP terrain service in the background and walks an External-terrain
scenario against it, then checks the result against the built-in stair.
"""

import numpy as np

from gaitforge import config
from gaitforge.bridge import TcpLink, encode, serve_terrain
from gaitforge.runtime import simulate

slope = 0.2
world = config.from_dict({"terrain": {"kind": "stair", "slope": slope}, "loop": {"duration": 8}})
external = config.from_dict({"terrain": {"kind": "external", "source": "stair", "slope": slope},
                             "bridge": {"decimation": 1}, "loop": {"duration": 8}})

server = serve_terrain(world.terrain.world(), background=True)
print("terrain service on %s:%d" % server.address)
link = TcpLink(*server.address)
try:
    log = simulate(external, link=link)
finally:
    link.close()
    server.shutdown()
    server.server_close()

print("first message on the wire:", encode(log.outbound[0]).strip())
print(f"{len(log.outbound)} pose messages sent, fallback ticks: "
      f"{int(np.sum(log['flags'].astype(int) & 16 > 0))}")
ref = simulate(world)
print(f"estimated slope {log['m_k'][-1]:.4f} (built-in stair {ref['m_k'][-1]:.4f}), "
      f"height {-log['d_z'][-1]:.3f} m vs {-ref['d_z'][-1]:.3f} m")
