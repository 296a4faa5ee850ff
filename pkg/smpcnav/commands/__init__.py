
from . import plan
from . import mpc
from . import montecarlo
from . import bench


smpcnav_commands = [
    plan,
    mpc,
    montecarlo,
    bench,
]
