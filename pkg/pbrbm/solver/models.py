from django.db import models


class ExperimentRun(models.Model):
    """
    One executed experiment pipeline.

    A row is created in ``RUNNING`` state when the management command starts a
    pipeline and moved to ``SUCCEEDED`` or ``FAILED`` when it ends.

    :ivar manifest_hash: first 16 hex digits of the sha256 of the run manifest;
        also written into the header of every output file.
    :ivar output_dir: final location of the outputs (empty for failed runs).
    :ivar message: failure reason, or a one-line summary on success.
    """
    RUNNING = "RUNNING"
    SUCCEEDED = "SUCCEEDED"
    FAILED = "FAILED"
    STATUS_CHOICES = [
        (RUNNING, "Running"),
        (SUCCEEDED, "Succeeded"),
        (FAILED, "Failed")
    ]

    pipeline = models.CharField(max_length=32)
    preset = models.CharField(max_length=32, blank=True)
    seed = models.PositiveBigIntegerField(default=1)
    manifest_hash = models.CharField(max_length=16, blank=True)
    status = models.CharField(max_length=10, choices=STATUS_CHOICES, default=RUNNING)
    output_dir = models.CharField(max_length=512, blank=True)
    message = models.TextField(blank=True)
    created_time = models.DateTimeField(auto_now_add=True)

    class Meta:
        ordering = ("-created_time", "-id")

    def __str__(self):
        return f"{self.pipeline} ({self.preset or 'custom'}, seed {self.seed}) {self.status}"
