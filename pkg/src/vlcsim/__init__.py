"""Indoor VLC channel simulator with hologram-shaped beams.

Submodules:
    scene       room geometry, partitioning, occlusion
    channel     multipath impulse-response ray tracer
    photometry  illuminance maps and 300 lx compliance
    cgh         phase-hologram design by simulated annealing
    sbls        best-light-source selection protocol
    metrics     delay spread, 3 dB bandwidth, power gain, OOK rate
    cli         batch sweep / illumination / hologram-design runner
"""

from .scene import (
    Scene, Surface, Luminaire, Receiver, ElementSet, SurfaceElement,
    build_room_a, build_room_b, load_scene, partition, visible, vec3,
    ConfigError, SPEED_OF_LIGHT, DEFAULT_SOURCE_ORDER,
)
from .channel import (
    ImpulseResponse, EmitterModel, BeamMap, impulse_response, los_gain,
    received_power, uniform_beam_map, cgh_emitter, PLAIN_EMITTER, DEFAULT_DT,
)
from .photometry import (
    IlluminanceMap, Redirection, illuminance_at, illuminance_map,
    calibrate_flux, compliance_min,
)
from .cgh import (
    Hologram, FarFieldPattern, TargetPattern, AnnealSchedule, AnnealResult,
    far_field, far_field_direct, cost, optimize, greedy_baseline,
    beam_intensity_map, cell_target,
)
from .sbls import NoiseModel, ProbeReport, SelectionState, probe_cycle, \
    select_best, snr
from .metrics import (
    ChannelMetrics, BandwidthResult, mean_delay, delay_spread, bandwidth_3db,
    power_gain_db, ook_data_rate, path_loss_db, compute_metrics,
)

__version__ = "0.1.0"
