"""
Energy and engagement networks
==============================

Build a network from a hand-made activity record and write it as DOT.
"""

import numpy as np

from teampulse.netmetrics import build_network
from teampulse.render import emit_network_dot
from teampulse.vad import SpeakerActivity

# A and B trade 3 s turns for a minute; C chips in twice.
seconds = np.arange(60)
a = (seconds // 3) % 2 == 0
b = ~a
c = np.isin(seconds, [20, 41])
activity = SpeakerActivity.from_matrix(0.0, ("A", "B", "C"), np.array([a, b, c]))

net = build_network(activity, (0.0, 60.0))
for m in net.members:
    print(f"energy {m}: {net.energy[m]:.4f} starts/s")
for (i, j), w in sorted(net.engagement.items()):
    print(f"engagement {i}-{j}: {w:.4f} responses/s "
          f"({net.responses[(i, j)]} + {net.responses[(j, i)]})")

# Render with Graphviz, e.g. ``dot -Tpng phase.dot -o phase.png``; the
# layout attribute asks for a circular arrangement.
print(emit_network_dot(net))
