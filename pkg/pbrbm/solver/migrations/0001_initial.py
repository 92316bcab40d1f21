# Generated by Django 5.1.6 on 2025-03-02 10:12

from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='ExperimentRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('pipeline', models.CharField(max_length=32)),
                ('preset', models.CharField(blank=True, max_length=32)),
                ('seed', models.PositiveBigIntegerField(default=1)),
                ('manifest_hash', models.CharField(blank=True, max_length=16)),
                ('status', models.CharField(choices=[('RUNNING', 'Running'), ('SUCCEEDED', 'Succeeded'), ('FAILED', 'Failed')], default='RUNNING', max_length=10)),
                ('output_dir', models.CharField(blank=True, max_length=512)),
                ('message', models.TextField(blank=True)),
                ('created_time', models.DateTimeField(auto_now_add=True)),
            ],
            options={
                'ordering': ('-created_time', '-id'),
            },
        ),
    ]
