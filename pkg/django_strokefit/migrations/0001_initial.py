# -*- coding: utf-8 -*-
# Generated by Django 3.2.16 on 2026-10-19 14:02

from django.db import migrations, models


class Migration(migrations.Migration):
    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='FitAction',
            fields=[
                ('id', models.AutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('action', models.CharField(choices=[('sketch', 'sketch'), ('render', 'render'), ('init', 'init'), ('verify', 'verify')],
                                            max_length=64)),
                ('start', models.DateTimeField(auto_now_add=True)),
                ('end', models.DateTimeField(blank=True, null=True)),
                ('last_modified', models.DateTimeField(auto_now=True)),
                ('status',
                 models.CharField(choices=[('queued', 'queued'), ('in_progress', 'in_progress'), ('complete', 'complete'), ('aborted', 'aborted')], default='queued',
                                  max_length=32)),
                ('log', models.TextField(blank=True)),
                ('argv', models.CharField(blank=True, max_length=1000)),
                ('task_kwargs', models.TextField(default='{}', verbose_name='json of the non-default settings of this run')),
                ('output_dir', models.CharField(blank=True, max_length=1000)),
                ('num_strokes', models.IntegerField(default=0)),
                ('final_loss', models.FloatField(blank=True, null=True)),
            ],
        ),
        migrations.CreateModel(
            name='InitStrokesAction',
            fields=[
            ],
            options={
                'proxy': True,
                'indexes': [],
                'constraints': [],
            },
            bases=('django_strokefit.fitaction',),
        ),
        migrations.CreateModel(
            name='RenderSketchAction',
            fields=[
            ],
            options={
                'proxy': True,
                'indexes': [],
                'constraints': [],
            },
            bases=('django_strokefit.fitaction',),
        ),
        migrations.CreateModel(
            name='SketchFitAction',
            fields=[
            ],
            options={
                'proxy': True,
                'indexes': [],
                'constraints': [],
            },
            bases=('django_strokefit.fitaction',),
        ),
        migrations.CreateModel(
            name='VerifyPropertiesAction',
            fields=[
            ],
            options={
                'proxy': True,
                'indexes': [],
                'constraints': [],
            },
            bases=('django_strokefit.fitaction',),
        ),
    ]
