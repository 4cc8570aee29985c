"""
EMA 教师网络: teacher ← r·teacher + (1−r)·student
"""

from dataclasses import dataclass

from encoder.model import EncoderParams


@dataclass(frozen=True)
class TeacherState:
    """
    教师网络状态

    属性:
        params: 教师参数
        ema_rate: 衰减率，取值 [0, 1)
    """
    params: EncoderParams
    ema_rate: float = 0.999

    def __post_init__(self):
        if not 0.0 <= self.ema_rate < 1.0:
            raise ValueError(f"ema_rate 必须在 [0, 1) 内: {self.ema_rate}")


def ema_update(teacher, student):
    """
    用学生参数对教师参数做指数滑动平均

    参数:
        teacher: TeacherState
        student: EncoderParams

    返回:
        TeacherState: 新的教师状态
    """
    rate = teacher.ema_rate
    params = teacher.params.map(lambda t, s: rate * t + (1.0 - rate) * s, student)
    return TeacherState(params=params, ema_rate=rate)
