# Regenerates the TorchScript fixtures used by the tests.
from typing import List

import torch


class TinyFeatures(torch.nn.Module):
    tau: List[torch.Tensor]

    def __init__(self):
        super().__init__()
        torch.manual_seed(0)
        self.c1 = torch.nn.Conv2d(3, 4, 3, padding=1)
        self.c2 = torch.nn.Conv2d(4, 6, 3, padding=1)
        self.tau = [torch.ones(4), torch.full((6,), 0.5)]

    def forward(self, x: torch.Tensor) -> List[torch.Tensor]:
        a = torch.relu(self.c1(x))
        b = torch.relu(self.c2(torch.nn.functional.avg_pool2d(a, 2)))
        return [a, b]


class TinyEmbedding(torch.nn.Module):
    def __init__(self):
        super().__init__()
        torch.manual_seed(1)
        self.c = torch.nn.Conv2d(3, 8, 3, padding=1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return torch.relu(self.c(x)).mean(dim=[2, 3])


if __name__ == "__main__":
    torch.jit.script(TinyFeatures()).save("tiny_features.pt")
    torch.jit.script(TinyEmbedding()).save("tiny_embedding.pt")
