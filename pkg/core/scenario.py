from enum import Enum


class Scenario(str, Enum):
    """
    Continual-learning protocol.

    CL1 - task id given at test time, one head per task.
    CL2 - one shared head, no task id at test time.
    CL3 - one head per task, task id inferred at test time.
    """

    CL1 = "cl1"
    CL2 = "cl2"
    CL3 = "cl3"

    @classmethod
    def parse(cls, value) -> "Scenario":
        if isinstance(value, Scenario):
            return value
        return cls(str(value).strip().lower())

    @property
    def multi_head(self) -> bool:
        return self is not Scenario.CL2

    @property
    def task_id_at_test(self) -> bool:
        return self is Scenario.CL1
