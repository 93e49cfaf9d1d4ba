from errors import DomainError

BASE_PROMPT = (
    "UAV flying at low altitude inside the near-field region of a large planar "
    "array; task: joint trajectory and beam prediction. Flight mode: "
)

# Um prompt por modo de voo; o índice é a linha da tabela de embeddings da tarefa.
MODE_DESCRIPTIONS = (
    "steady cruise along an urban corridor",
    "fast cruising flight along a straight street canyon",
    "coordinated left turn at constant speed around a building block",
    "coordinated right turn at constant speed around a building block",
    "steady climb to clear rooftop obstacles",
    "steady descent towards a low-altitude delivery point",
    "hovering in place with small positional jitter",
    "accelerating cruise after take-off",
    "decelerating cruise on approach to a waypoint",
    "climbing turn while repositioning between corridors",
)

TASK_MODE_COUNT = len(MODE_DESCRIPTIONS)


def describe_mode(mode: int) -> str:
    return BASE_PROMPT + MODE_DESCRIPTIONS[task_mode_label(mode)]


def task_mode_label(mode: int) -> int:
    """Modo de voo -> linha da tabela de embeddings (identidade, com verificação de limites)."""
    mode = int(mode)
    if not 0 <= mode < TASK_MODE_COUNT:
        raise DomainError(f"task mode must be in [0, {TASK_MODE_COUNT}), got {mode}")
    return mode
